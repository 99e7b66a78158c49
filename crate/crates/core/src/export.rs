//! Plain-text writers for spectra, sampled spinors and transmission matrices.
//!
//! Machine outputs print floats with 17 significant digits; complex numbers
//! appear as `[re, im]` pairs in JSON.

use serde::{Serialize, Serializer};

use crate::boundary::matrix_to_json;
use crate::eigen::current;
use crate::graph::SpinorSample;
use crate::linalg::CMatrix;
use crate::secular::SpectralResult;
use crate::transmission::TransmissionMatrix;

pub const SPECTRUM_HEADER: &str = "index,E,branch,kappa_re,kappa_im,det_residual,multiplicity";
pub const SAMPLE_HEADER: &str =
    "bond,x,psi1_re,psi1_im,psi2_re,psi2_im,psi3_re,psi3_im,psi4_re,psi4_im,J";

/// Float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Float with 6 significant digits, for human-readable tables.
pub fn fmt6(x: f64) -> String {
    format!("{x:.5e}")
}

pub(crate) fn ser_matrix<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    matrix_to_json(m).serialize(s)
}

pub fn spectrum_csv(roots: &[SpectralResult]) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for (k, r) in roots.iter().enumerate() {
        let fields = [
            k.to_string(),
            fmt17(r.energy),
            r.branch.as_str().to_string(),
            fmt17(r.kappa.re),
            fmt17(r.kappa.im),
            fmt17(r.det_residual),
            r.multiplicity.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn samples_csv(samples: &[SpinorSample]) -> String {
    let mut out = String::from(SAMPLE_HEADER);
    out.push('\n');
    for s in samples {
        let mut fields = vec![s.bond.to_string(), fmt17(s.position)];
        for z in s.value.iter() {
            fields.push(fmt17(z.re));
            fields.push(fmt17(z.im));
        }
        fields.push(fmt17(current(&s.value)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct TransmissionDoc<'a> {
    energy: f64,
    kappa: [f64; 2],
    branch: &'a str,
    condition_number: f64,
    dim: usize,
    #[serde(rename = "T")]
    t: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    s: Option<Vec<Vec<[f64; 2]>>>,
}

/// JSON document with `T`, optionally `S`, the condition number and energy.
pub fn transmission_json(t: &TransmissionMatrix, scattering: Option<&CMatrix>) -> String {
    let doc = TransmissionDoc {
        energy: t.energy,
        kappa: [t.kappa.re, t.kappa.im],
        branch: t.branch.as_str(),
        condition_number: t.condition_number,
        dim: t.t.nrows(),
        t: matrix_to_json(&t.t),
        s: scattering.map(matrix_to_json),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serialises");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{build_kirchhoff_zero_mode_bc, matrix_from_json};
    use crate::graph::{MetricStarGraph, Spinor};
    use crate::linalg::c;
    use crate::secular::{find_spectrum, ScanOptions};
    use crate::transmission::{scattering_matrix, transmission_matrix};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.trim_start_matches('-').split('e').next().unwrap().len(), 18);
        }
        assert_eq!(fmt6(1.0 / 3.0), "3.33333e-1");
    }

    #[test]
    fn spectrum_csv_round_trips() {
        let g = MetricStarGraph::equal(3, 1.0, 1.0).unwrap();
        let bc = build_kirchhoff_zero_mode_bc(3).unwrap();
        let roots = find_spectrum(&bc, &g, &ScanOptions::new(1.01, 4.0, 400)).unwrap().roots;
        let csv = spectrum_csv(&roots);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SPECTRUM_HEADER));
        for (k, (line, r)) in lines.zip(&roots).enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 7);
            assert_eq!(f[0].parse::<usize>().unwrap(), k);
            assert_eq!(f[1].parse::<f64>().unwrap(), r.energy);
            assert_eq!(f[2], "positive");
            assert_eq!(f[3].parse::<f64>().unwrap(), r.kappa.re);
            assert_eq!(f[6].parse::<usize>().unwrap(), r.multiplicity);
        }
    }

    #[test]
    fn samples_csv_columns() {
        let v = Spinor::new(c(1.0, 0.5), c(0.25, -1.0), c(0.0, 2.0), c(-3.0, 0.0));
        let csv = samples_csv(&[SpinorSample { bond: 2, position: 0.75, value: v }]);
        let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row.len(), 11);
        assert_eq!(row[0], 2.0);
        assert_eq!(row[1], 0.75);
        assert_eq!(&row[2..10], &[1.0, 0.5, 0.25, -1.0, 0.0, 2.0, -3.0, 0.0]);
        assert_eq!(row[10], current(&v));
    }

    #[test]
    fn transmission_json_round_trips() {
        let g = MetricStarGraph::new(vec![1.0, 1.5], 1.0).unwrap();
        let bc = build_kirchhoff_zero_mode_bc(2).unwrap();
        let t = transmission_matrix(2.0, &bc, &g).unwrap();
        let s = scattering_matrix(&t, &g);
        let doc: serde_json::Value = serde_json::from_str(&transmission_json(&t, Some(&s))).unwrap();
        assert_eq!(doc["energy"].as_f64(), Some(2.0));
        assert_eq!(doc["dim"].as_u64(), Some(8));
        let parse = |v: &serde_json::Value| {
            let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v.clone()).unwrap();
            matrix_from_json(&rows).unwrap()
        };
        assert_eq!(parse(&doc["T"]), t.t);
        assert_eq!(parse(&doc["S"]), s);
        let plain: serde_json::Value = serde_json::from_str(&transmission_json(&t, None)).unwrap();
        assert!(plain.get("S").is_none());
    }
}
