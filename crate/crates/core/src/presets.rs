//! Built-in potentials and the reference values they are checked against.

use serde_json::json;

use crate::bigreal::Digits;
use crate::eigen::BoundaryProblem;
use crate::error::{Result, SolverError};
use crate::potential::Potential;

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub potential: Potential,
    /// Decimal string for the wall half-width.
    pub half_width: String,
}

impl Preset {
    pub fn problem(&self, target: Digits) -> Result<BoundaryProblem> {
        let bits = target.bits().max(64);
        let l = crate::bigreal::parse_decimal(&self.half_width, bits)
            .ok_or_else(|| SolverError::InvalidInput(format!("bad L {:?}", self.half_width)))?;
        BoundaryProblem::new(self.potential.clone(), l, target)
    }
}

/// Names accepted by [`preset`], in table order.
pub const TABLE_PRESETS: [&str; 7] = ["A", "B", "C", "D", "F", "G", "H"];
pub const EXTRA_PRESETS: [&str; 3] = ["box", "harmonic", "doublewell"];

/// Default `mu^2` for the `doublewell` preset.
pub const DOUBLEWELL_MU2: &str = "25";
/// Half-width for `doublewell` at the default depth.
pub const DOUBLEWELL_L: &str = "7";

fn table_potential(name: &str) -> Option<(serde_json::Value, &'static str)> {
    Some(match name {
        "A" => (json!({"x^2": "1", "x^4": "-4", "x^6": "1"}), "4"),
        "B" => (json!({"x^2": "4", "x^4": "-6", "x^6": "1"}), "4"),
        "C" => (
            json!({"x^2": "105/64", "x^4": "-43/8", "x^6": "1", "x^8": "-1", "x^10": "1"}),
            "3",
        ),
        "D" => (
            json!({"x^2": "169/64", "x^4": "-59/8", "x^6": "1", "x^8": "-1", "x^10": "1"}),
            "3",
        ),
        "F" => (
            json!({"x^2": "-1", "x^4": "2", "x^6": "-0.9", "x^8": "0.1"}),
            "4",
        ),
        "G" => (
            json!({"x^2": "-1", "x^4": "3", "x^6": "-2", "x^10": "0.1"}),
            "3",
        ),
        "H" => (
            json!({"x^2": "2", "x^4": "-7.5", "x^6": "5.5", "x^8": "-0.877", "x^10": "0.04"}),
            "4",
        ),
        _ => return None,
    })
}

/// Double well `-mu2 x^2 + x^4`.
pub fn doublewell(mu2: &str) -> Result<Potential> {
    let neg = if let Some(stripped) = mu2.strip_prefix('-') {
        stripped.to_string()
    } else {
        format!("-{mu2}")
    };
    Potential::from_json(&json!({"x^2": neg, "x^4": "1"}))
        .map(|p| p.with_name(format!("doublewell(mu2={mu2})")))
        .map_err(|e| SolverError::InvalidInput(e.to_string()))
}

/// Looks up a preset by name (case-sensitive for the table letters).
pub fn preset(name: &str) -> Option<Preset> {
    let (potential, l) = match name {
        "box" => (Potential::zero(), "1"),
        "harmonic" => (Potential::from_json(&json!({"x^2": "1"})).ok()?, "10"),
        "doublewell" => (doublewell(DOUBLEWELL_MU2).ok()?, DOUBLEWELL_L),
        _ => {
            let (v, l) = table_potential(name)?;
            (Potential::from_json(&v).ok()?, l)
        }
    };
    let potential = if name == "doublewell" {
        potential
    } else {
        potential.with_name(name.to_string())
    };
    Some(Preset {
        name: EXTRA_PRESETS
            .iter()
            .chain(TABLE_PRESETS.iter())
            .find(|n| **n == name)
            .copied()?,
        potential,
        half_width: l.to_string(),
    })
}

/// First four eigenvalues of each table potential at its preset `L`.
pub fn table1_golden(name: &str) -> Option<[&'static str; 4]> {
    Some(match name {
        "A" => [
            "-2.000000000000000000",
            "-1.772726698991350330",
            "2.078279891768595361",
            "5.604028342382013654",
        ],
        "B" => [
            "-9.001720238527719715",
            "-9.000000000000000000",
            "0.639394262865333280",
            "1.936629224926380607",
        ],
        "C" => [
            "0.375000000000000000",
            "2.357398881839175696",
            "6.988755014467723300",
            "13.88051623671388190",
        ],
        "D" => [
            "-0.195122059734627597",
            "1.125000000000000000",
            "5.646143524135629302",
            "12.38474674598872574",
        ],
        "F" => [
            "-0.223991055384171854",
            "0.083481557863966793",
            "1.526487708073844797",
            "3.971174256474939459",
        ],
        "G" => [
            "-0.096291946230649098",
            "0.672993242745446704",
            "3.111022328724771653",
            "7.038082659880398654",
        ],
        "H" => [
            "0.807741647209432443",
            "3.277946311571061982",
            "7.667480496116480534",
            "13.578984131990285801",
        ],
        _ => return None,
    })
}

/// Levels with closed-form energies: `(preset, level, exact energy)`.
pub const SUSY_LEVELS: [(&str, usize, &str); 4] = [
    ("A", 0, "-2"),
    ("B", 1, "-9"),
    ("C", 0, "0.375"),
    ("D", 1, "1.125"),
];

#[derive(Clone, Copy, Debug)]
pub struct MomentRow {
    pub preset: &'static str,
    pub level: usize,
    pub m: u32,
    pub value: &'static str,
    /// Closed-form column, when it disagrees with `value` beyond its own digits.
    pub exact_note: Option<&'static str>,
}

const fn row(preset: &'static str, level: usize, m: u32, value: &'static str) -> MomentRow {
    MomentRow {
        preset,
        level,
        m,
        value,
        exact_note: None,
    }
}

/// `<x^{2m}>` reference values for the closed-form states.
pub const TABLE2_GOLDEN: [MomentRow; 20] = [
    row("A", 0, 1, "1.7042723043"),
    row("A", 0, 2, "3.9085446087"),
    row("A", 0, 3, "10.373497673"),
    row("A", 0, 4, "30.518356869"),
    row("A", 0, 5, "97.343955598"),
    row("B", 1, 1, "3.1795525642"),
    row("B", 1, 2, "11.0386576927"),
    row("B", 1, 3, "41.0648544887"),
    row("B", 1, 4, "161.8298653908"),
    MomentRow {
        preset: "B",
        level: 1,
        m: 5,
        value: "670.2814413720",
        exact_note: Some("exact column prints 670.82814, a transposed digit; 670.28144 agrees with the computed value"),
    },
    row("C", 0, 1, "0.45832470069"),
    row("C", 0, 2, "0.43854420934"),
    row("C", 0, 3, "0.54740034191"),
    row("C", 0, 4, "0.79673314349"),
    row("C", 0, 5, "1.28945196690"),
    row("D", 1, 1, "0.956841751448"),
    row("D", 1, 2, "1.194350514116"),
    row("D", 1, 3, "1.738359600265"),
    row("D", 1, 4, "2.8134027359576611"),
    row("D", 1, 5, "4.935043317278"),
];
