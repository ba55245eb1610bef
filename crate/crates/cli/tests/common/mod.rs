//! Synthetic bean-like data for exercising the command line end to end.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

pub const FEATURES: [&str; 16] = [
    "Area",
    "Perimeter",
    "MajorAxisLength",
    "MinorAxisLength",
    "AspectRation",
    "Eccentricity",
    "ConvexArea",
    "EquivDiameter",
    "Extent",
    "Solidity",
    "roundness",
    "Compactness",
    "ShapeFactor1",
    "ShapeFactor2",
    "ShapeFactor3",
    "ShapeFactor4",
];

/// (class, share of rows, mean major axis, mean minor axis)
const CLASSES: [(&str, f64, f64, f64); 7] = [
    ("DERMASON", 0.2605, 246.0, 166.0),
    ("SIRA", 0.1937, 299.0, 190.0),
    ("SEKER", 0.1489, 251.0, 201.0),
    ("HOROZ", 0.1417, 372.0, 184.0),
    ("CALI", 0.1198, 409.0, 237.0),
    ("BARBUNYA", 0.0971, 370.0, 240.0),
    ("BOMBAY", 0.0383, 593.0, 374.0),
];

/// CSV text with roughly `n` rows of ellipse-like shape descriptors.
pub fn bean_csv(n: usize, seed: u64) -> String {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let mut z = || std.sample(&mut rng);
    let mut s = FEATURES.join(",");
    s.push_str(",Class\n");
    for &(name, share, mu_major, mu_minor) in &CLASSES {
        let count = ((share * n as f64).round() as usize).max(6);
        for _ in 0..count {
            let shared = z();
            let major = mu_major * (1.0 + 0.05 * (0.7 * shared + 0.7 * z()));
            let minor = mu_minor * (1.0 + 0.05 * (0.7 * shared + 0.7 * z()));
            let area = std::f64::consts::PI * major * minor / 4.0 * (1.0 + 0.01 * z());
            let perimeter = std::f64::consts::PI * (major + minor) / 2.0 * (1.0 + 0.01 * z());
            let convex = area * (1.0 + 0.006 + 0.002 * z().abs());
            let equiv = (4.0 * area / std::f64::consts::PI).sqrt();
            let extent = 0.75 + 0.03 * z();
            let v = [
                area,
                perimeter,
                major,
                minor,
                major / minor,
                (1.0 - (minor / major).powi(2)).max(0.0).sqrt(),
                convex,
                equiv,
                extent,
                area / convex,
                4.0 * std::f64::consts::PI * area / (perimeter * perimeter),
                equiv / major,
                major / area,
                minor / area,
                area / (std::f64::consts::PI * major * major / 4.0),
                area / (std::f64::consts::PI * major * minor / 4.0) * (1.0 + 0.002 * z()),
            ];
            for x in v {
                let _ = write!(s, "{x:.6},");
            }
            s.push_str(name);
            s.push('\n');
        }
    }
    s
}

pub fn write_beans(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let path = dir.join("beans.csv");
    std::fs::write(&path, bean_csv(n, seed)).unwrap();
    path
}

pub fn drybean(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drybean"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}
