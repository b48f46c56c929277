//! Plain-text grid snapshots with a trailing SHA-256 checksum.
//!
//! ```text
//! n k l alpha h N1 N2 [N3]
//! # domain ball 1e0
//! # residual_norm 3.1e-12
//! index u du_1 .. du_n d2u_11 d2u_12 .. d2u_nn
//! ...
//! # sha256 <hex digest of every preceding byte>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so reading a snapshot
//! back gives bit-identical values.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::grid::{DomainSpec, Lattice, Shape};
use super::GridSolution;
use crate::error::{Error, Result};
use crate::matrix::SymmetricField;
use crate::symfunc::OperatorSpec;

const CHECKSUM_TAG: &str = "# sha256 ";

pub fn write_snapshot(sol: &GridSolution) -> String {
    let mut out = String::new();
    let sp = &sol.spec;
    let dims: Vec<String> = sol.lattice.dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{} {} {} {:e} {:e} {}", sp.n, sp.k, sp.l, sp.alpha, sol.lattice.h, dims.join(" "));
    let _ = writeln!(out, "# domain {}", sol.domain.shape.label());
    let _ = writeln!(out, "# residual_norm {:e}", sol.residual_norm);
    for (s, &node) in sol.lattice.interior.iter().enumerate() {
        let _ = write!(out, "{node} {:e}", sol.u[s]);
        for v in &sol.du[s] {
            let _ = write!(out, " {v:e}");
        }
        for v in sol.d2u[s].upper() {
            let _ = write!(out, " {v:e}");
        }
        out.push('\n');
    }
    let digest = hex::encode(Sha256::digest(out.as_bytes()));
    let _ = writeln!(out, "{CHECKSUM_TAG}{digest}");
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptInput(msg.into())
}

fn parse<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| corrupt(format!("cannot parse {what} from {tok:?}")))
}

pub fn read_snapshot(text: &str) -> Result<GridSolution> {
    let body_end = text
        .rfind(CHECKSUM_TAG)
        .ok_or_else(|| corrupt("missing checksum line"))?;
    let (body, tail) = text.split_at(body_end);
    let claimed = tail[CHECKSUM_TAG.len()..].trim();
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if claimed != actual {
        return Err(corrupt("checksum mismatch"));
    }

    let mut lines = body.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| corrupt("empty snapshot"))?
        .split_whitespace()
        .collect();
    if header.len() < 7 {
        return Err(corrupt("short header"));
    }
    let n: usize = parse(header[0], "n")?;
    let spec = OperatorSpec::new(n, parse(header[1], "k")?, parse(header[2], "l")?, parse(header[3], "alpha")?)
        .map_err(|e| corrupt(e.to_string()))?;
    let h: f64 = parse(header[4], "h")?;
    let dims: Vec<usize> = header[5..].iter().map(|t| parse(t, "dimension")).collect::<Result<_>>()?;
    if dims.len() != n {
        return Err(corrupt("grid rank differs from n"));
    }

    let mut shape = None;
    let mut residual_norm = f64::NAN;
    let mut interior = Vec::new();
    let (mut u, mut du, mut d2u) = (Vec::new(), Vec::new(), Vec::new());
    let width = 2 + n + n * (n + 1) / 2;
    for line in lines {
        if let Some(rest) = line.strip_prefix("# domain ") {
            shape = Some(Shape::parse_label(rest)?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# residual_norm ") {
            residual_norm = parse(rest.trim(), "residual norm")?;
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != width {
            return Err(corrupt(format!("node line has {} fields, expected {width}", toks.len())));
        }
        interior.push(parse::<usize>(toks[0], "node index")?);
        let vals: Vec<f64> = toks[1..].iter().map(|t| parse(t, "value")).collect::<Result<_>>()?;
        u.push(vals[0]);
        du.push(vals[1..=n].to_vec());
        d2u.push(SymmetricField::from_upper(n, &vals[n + 1..]).map_err(|e| corrupt(e.to_string()))?);
    }
    let shape = shape.ok_or_else(|| corrupt("missing domain line"))?;
    let lattice = Lattice::from_interior(h, dims.clone(), interior)?;
    let domain = DomainSpec {
        shape,
        dim: n,
        mesh: dims.iter().copied().max().unwrap_or(0),
    };
    let mut sol = GridSolution {
        spec,
        domain,
        lattice,
        u,
        du,
        d2u,
        admissible: false,
        residual_norm,
    };
    sol.recheck_admissible();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, DomainSpec, PolynomialRhs, SolveOptions};

    fn sample() -> GridSolution {
        let spec = OperatorSpec::new(2, 2, 1, 0.25).unwrap();
        solve(
            &DomainSpec::ball(2, 1.0, 9),
            &PolynomialRhs::new(0.4, 0.3, 0.0, 0.0),
            &spec,
            &SolveOptions::default(),
        )
        .unwrap()
        .solution
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let sol = sample();
        let text = write_snapshot(&sol);
        let back = read_snapshot(&text).unwrap();
        assert_eq!(back, sol);
        assert_eq!(write_snapshot(&back), text);
    }

    #[test]
    fn tampering_is_detected() {
        let text = write_snapshot(&sample());
        let tampered = text.replacen("e-1", "e-2", 1);
        assert!(matches!(read_snapshot(&tampered), Err(Error::CorruptInput(_))));
        let truncated = &text[..text.len() / 2];
        assert!(matches!(read_snapshot(truncated), Err(Error::CorruptInput(_))));
    }
}
