//! Reference datasets shipped with the binary.
//!
//! `assets/reference_figures_v1.csv` holds the plotted coordinates of each
//! published figure, one point per row, tagged with the figure id and series
//! label (`c=5`, `l=20`).

use std::fmt;

pub const REFERENCE_CSV: &str = include_str!("../assets/reference_figures_v1.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Figure {
    F6a,
    F6b,
    F7,
    F8,
    F9,
    F10a,
    F10b,
    F11,
}

impl Figure {
    pub const ALL: [Figure; 8] =
        [Figure::F6a, Figure::F6b, Figure::F7, Figure::F8, Figure::F9, Figure::F10a, Figure::F10b, Figure::F11];

    pub fn id(self) -> &'static str {
        match self {
            Figure::F6a => "6a",
            Figure::F6b => "6b",
            Figure::F7 => "7",
            Figure::F8 => "8",
            Figure::F9 => "9",
            Figure::F10a => "10a",
            Figure::F10b => "10b",
            Figure::F11 => "11",
        }
    }

    pub fn parse(id: &str) -> Option<Figure> {
        Figure::ALL.into_iter().find(|f| f.id() == id)
    }

    pub fn mode(self) -> ComparisonMode {
        match self {
            Figure::F6a | Figure::F6b => ComparisonMode::Exact,
            Figure::F11 => ComparisonMode::MonteCarloCi,
            _ => ComparisonMode::QualitativeTrend,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonMode {
    /// Relative error at most `1e-9`.
    Exact,
    /// Within `max(0.015, 4 * CI half-width)`.
    MonteCarloCi,
    /// Direction of change along the series only.
    QualitativeTrend,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: u64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub figure: Figure,
    /// Full label, e.g. `c=5`.
    pub label: String,
    /// Name of the series parameter, e.g. `c`.
    pub parameter: String,
    pub value: u64,
    pub points: Vec<Point>,
}

impl Series {
    pub fn mode(&self) -> ComparisonMode {
        self.figure.mode()
    }
}

/// Series of `figure` in file order.
pub fn dataset(figure: Figure) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for (i, line) in REFERENCE_CSV.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let [fig, label, x, y] = fields[..] else {
            panic!("reference row {} is malformed", i + 1);
        };
        if fig != figure.id() {
            continue;
        }
        let point = Point {
            x: x.parse().unwrap_or_else(|_| panic!("reference row {}: bad x", i + 1)),
            y: y.parse().unwrap_or_else(|_| panic!("reference row {}: bad y", i + 1)),
        };
        match out.last_mut() {
            Some(s) if s.label == label => s.points.push(point),
            _ => {
                let (parameter, value) = label.split_once('=').expect("series label has the form name=value");
                out.push(Series {
                    figure,
                    label: label.to_string(),
                    parameter: parameter.to_string(),
                    value: value.parse().expect("series value is an integer"),
                    points: vec![point],
                });
            }
        }
    }
    out
}
