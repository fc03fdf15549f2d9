//! Text listing of the catalog and the operation table.

use std::fmt::Write;

use abp_core::geom::SurfaceDescriptor;
use abp_core::logsob::ConstantVariant;
use abp_core::serre::{DomainDescriptor, FieldDescriptor};

use crate::ops::OPERATIONS;

const SURFACES: &[(&str, &str)] = &[
    ("sphere", "n, radius"),
    ("ellipsoid", "axes: [a_1, ..., a_{n+1}]"),
    ("torus", "major, minor"),
    ("equatorial-sphere", "n, m"),
    ("great-circle", "m"),
    ("small-sphere", "n, latitude"),
    ("clifford-torus", "(none)"),
];

const DOMAINS: &[(&str, &str)] = &[
    ("disk", "radius, center = [0, 0]"),
    ("ellipse", "axes: [a, b], center = [0, 0]"),
    ("peanut-domain", "amplitude = 0.45"),
    ("star-domain", "base, terms: [{k, cos, sin}], center = [0, 0]"),
    ("ball", "radius, center = [0, 0, 0]"),
    ("solid-ellipsoid", "axes: [a, b, c], center = [0, 0, 0]"),
];

const FIELDS: &[(&str, &str)] = &[
    ("identity", "(none)"),
    ("constant", "matrix: [[..]]"),
    ("radial-scalar", "a, b"),
    ("affine-scalar", "c, xi"),
    ("trig-gram", "c = 0, b: [[[{freq, cos, sin}]]]"),
    ("cofactor", "potential: {potential, ..}"),
];

const POTENTIALS: &[(&str, &str)] = &[
    ("quadratic", "matrix, center"),
    ("quartic-radial", "alpha, beta, center"),
    ("exp-perturbed", "xi, eps"),
];

const FAMILIES: &[(&str, &str)] = &[
    ("constant", "value"),
    ("affine", "xi, constant = 0"),
    ("exp-linear", "xi, coeff = 1"),
    ("chart-trig", "constant, terms: [{freq, cos, sin}]"),
    ("ambient-trig", "constant, terms: [{freq, cos, sin}]"),
    ("ambient-poly", "terms: [{coeff, powers}]"),
];

fn section(out: &mut String, title: &str, key: &str, entries: &[(&str, &str)]) {
    writeln!(out, "{title} (key \"{key}\"):").unwrap();
    for (name, params) in entries {
        writeln!(out, "  {name:<20} {params}").unwrap();
    }
}

pub fn list_catalog() -> String {
    debug_assert!(SURFACES.iter().map(|e| e.0).eq(SurfaceDescriptor::NAMES));
    debug_assert!(DOMAINS.iter().map(|e| e.0).eq(DomainDescriptor::NAMES));
    debug_assert!(FIELDS.iter().map(|e| e.0).eq(FieldDescriptor::NAMES));
    let mut out = String::new();
    section(&mut out, "surfaces", "name", SURFACES);
    section(&mut out, "domains", "name", DOMAINS);
    section(&mut out, "matrix fields", "name", FIELDS);
    section(&mut out, "potentials", "potential", POTENTIALS);
    section(&mut out, "function families", "family", FAMILIES);
    writeln!(out, "log-Sobolev constant variants:").unwrap();
    for v in ConstantVariant::NAMES {
        writeln!(out, "  {v}").unwrap();
    }
    writeln!(out, "operations:").unwrap();
    for (module, ops) in OPERATIONS {
        writeln!(out, "  {module:<10} {}", ops.join(", ")).unwrap();
    }
    writeln!(out, "bundled campaigns:").unwrap();
    for (name, _) in crate::BUNDLED {
        writeln!(out, "  {name}").unwrap();
    }
    out
}
