//! Versioned plain-text dump of fitted surrogates.
//!
//! ```text
//! excite-id-surrogate 1
//! kind bilinear
//! mode operator
//! dictionary unicycle 3
//! names 1 x0 x1 cos(x2) sin(x2)
//! M 5
//! m 2
//! sigma_tilde 0
//! matrix 5 5
//! <5 rows of 5 numbers>
//! ...
//! ```
//!
//! Kernel surrogates replace the dictionary block with `kernel n k rho`,
//! `nodes d n` and `psi d L` tables. Numbers use the shortest decimal form
//! that parses back to the same `f64`.

use std::fmt::Write as _;

use super::bilinear::{BilinearSurrogate, Mode};
use super::dictionary::Dictionary;
use super::kernel::{KernelSurrogate, WendlandKernel};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub const FORMAT_HEADER: &str = "excite-id-surrogate";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Surrogate {
    Bilinear(BilinearSurrogate),
    Kernel(KernelSurrogate),
}

fn push_matrix(out: &mut String, tag: &str, a: &Matrix) {
    let _ = writeln!(out, "{tag} {} {}", a.nrows(), a.ncols());
    for r in 0..a.nrows() {
        let row: Vec<String> = a.row(r).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn to_text(s: &Surrogate) -> String {
    let mut out = format!("{FORMAT_HEADER} {FORMAT_VERSION}\n");
    match s {
        Surrogate::Bilinear(b) => {
            let _ = writeln!(out, "kind bilinear");
            let _ = writeln!(out, "mode {}", b.mode.name());
            let _ = writeln!(out, "dictionary {} {}", b.dictionary.kind_name(), b.dictionary.state_dim());
            let _ = writeln!(out, "names {}", b.dictionary.names().join(" "));
            let _ = writeln!(out, "M {}", b.dictionary.len());
            let _ = writeln!(out, "m {}", b.m());
            let st: Vec<String> = b.sigma_tilde.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "sigma_tilde {}{}{}", st.len(), if st.is_empty() { "" } else { " " }, st.join(" "));
            for k in &b.matrices {
                push_matrix(&mut out, "matrix", k);
            }
        }
        Surrogate::Kernel(k) => {
            let _ = writeln!(out, "kind kernel");
            let _ = writeln!(out, "kernel {} {} {}", k.kernel.n(), k.kernel.k(), k.kernel.rho());
            let _ = writeln!(out, "m {}", k.m());
            let _ = writeln!(out, "kx_inv_norm {}", k.kx_inv_norm);
            let nodes = Matrix::from_fn(k.nodes.len(), k.kernel.n(), |i, j| k.nodes[i][j]);
            push_matrix(&mut out, "nodes", &nodes);
            push_matrix(&mut out, "psi", &k.psi_x);
            for c in &k.coefficients {
                push_matrix(&mut out, "matrix", c);
            }
        }
    }
    out
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.iter.by_ref() {
            self.line = i + 1;
            if !l.trim().is_empty() {
                return Ok(l.trim());
            }
        }
        Err(Error::Parse {
            line: self.line + 1,
            msg: "unexpected end of input".into(),
        })
    }

    /// Next line split after an expected keyword.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let l = self.next_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected '{key}'")));
        }
        Ok(parts.collect())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid number '{s}'")))
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let p = self.keyed(key)?;
        if p.len() != 1 {
            return Err(self.err(format!("'{key}' takes one value")));
        }
        self.num(p[0])
    }

    fn matrix(&mut self, key: &str) -> Result<Matrix> {
        let p = self.keyed(key)?;
        if p.len() != 2 {
            return Err(self.err(format!("'{key}' needs rows and cols")));
        }
        let (r, c): (usize, usize) = (self.num(p[0])?, self.num(p[1])?);
        let mut a = Matrix::zeros(r, c);
        for i in 0..r {
            let l = self.next_line()?;
            let vals: Vec<&str> = l.split_whitespace().collect();
            if vals.len() != c {
                return Err(self.err(format!("expected {c} values, found {}", vals.len())));
            }
            for (j, v) in vals.iter().enumerate() {
                a[(i, j)] = self.num(v)?;
            }
        }
        Ok(a)
    }
}

pub fn from_text(text: &str) -> Result<Surrogate> {
    let mut ls = Lines {
        iter: text.lines().enumerate(),
        line: 0,
    };
    let version: u32 = ls.single(FORMAT_HEADER)?;
    if version != FORMAT_VERSION {
        return Err(ls.err(format!("unsupported format version {version}")));
    }
    let kind = ls.keyed("kind")?;
    match kind.as_slice() {
        ["bilinear"] => {
            let mode_s = ls.keyed("mode")?;
            let mode = Mode::from_name(mode_s.first().copied().unwrap_or("")).map_err(|e| ls.err(e.to_string()))?;
            let dict_p = ls.keyed("dictionary")?;
            if dict_p.len() != 2 {
                return Err(ls.err("'dictionary' needs kind and state dimension"));
            }
            let n: usize = ls.num(dict_p[1])?;
            let dictionary = Dictionary::from_name(dict_p[0], n).map_err(|e| ls.err(e.to_string()))?;
            let names = ls.keyed("names")?;
            if names.iter().ne(dictionary.names().iter()) {
                return Err(ls.err("observable names do not match the dictionary"));
            }
            let big_m: usize = ls.single("M")?;
            if big_m != dictionary.len() {
                return Err(ls.err(format!("M = {big_m} but dictionary has {}", dictionary.len())));
            }
            let m: usize = ls.single("m")?;
            let st = ls.keyed("sigma_tilde")?;
            let count: usize = ls.num(st.first().copied().unwrap_or(""))?;
            if st.len() != count + 1 {
                return Err(ls.err("sigma_tilde count mismatch"));
            }
            let sigma_tilde = st[1..].iter().map(|v| ls.num(v)).collect::<Result<Vec<f64>>>()?;
            let mut matrices = Vec::with_capacity(m + 1);
            for _ in 0..=m {
                let a = ls.matrix("matrix")?;
                if a.shape() != (big_m, big_m) {
                    return Err(ls.err(format!("matrix must be {big_m}x{big_m}")));
                }
                matrices.push(a);
            }
            Ok(Surrogate::Bilinear(BilinearSurrogate {
                mode,
                dictionary,
                matrices,
                sigma_tilde,
            }))
        }
        ["kernel"] => {
            let kp = ls.keyed("kernel")?;
            if kp.len() != 3 {
                return Err(ls.err("'kernel' needs n, k and rho"));
            }
            let kernel = WendlandKernel::new(ls.num(kp[0])?, ls.num(kp[1])?, ls.num(kp[2])?).map_err(|e| ls.err(e.to_string()))?;
            let m: usize = ls.single("m")?;
            let kx_inv_norm: f64 = ls.single("kx_inv_norm")?;
            let nodes_m = ls.matrix("nodes")?;
            if nodes_m.ncols() != kernel.n() {
                return Err(ls.err("node dimension does not match kernel"));
            }
            let d = nodes_m.nrows();
            let nodes: Vec<Vector> = (0..d).map(|i| nodes_m.row(i).transpose()).collect();
            let psi_x = ls.matrix("psi")?;
            if psi_x.nrows() != d {
                return Err(ls.err("observable table must have one row per node"));
            }
            let mut coefficients = Vec::with_capacity(m + 1);
            for _ in 0..=m {
                let a = ls.matrix("matrix")?;
                if a.shape() != (d, d) {
                    return Err(ls.err(format!("matrix must be {d}x{d}")));
                }
                coefficients.push(a);
            }
            Ok(Surrogate::Kernel(KernelSurrogate {
                kernel,
                nodes,
                coefficients,
                psi_x,
                kx_inv_norm,
            }))
        }
        _ => Err(ls.err("kind must be 'bilinear' or 'kernel'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koopman::kernel::kedmd_control_fit;
    use proptest::prelude::*;

    fn bilinear(vals: &[f64], mode: Mode) -> BilinearSurrogate {
        let dictionary = Dictionary::Affine(1);
        BilinearSurrogate {
            mode,
            dictionary,
            matrices: vals.chunks(4).map(|c| Matrix::from_row_slice(2, 2, c)).collect(),
            sigma_tilde: vec![1.5, f64::INFINITY],
        }
    }

    proptest! {
        #[test]
        fn bilinear_round_trip_is_exact(vals in prop::collection::vec(-1e6f64..1e6, 12), gen in any::<bool>()) {
            let mode = if gen { Mode::Generator } else { Mode::Operator };
            let s = Surrogate::Bilinear(bilinear(&vals, mode));
            prop_assert_eq!(from_text(&to_text(&s)).unwrap(), s);
        }
    }

    #[test]
    fn kernel_round_trip_is_exact() {
        let ker = WendlandKernel::new(1, 1, 0.7).unwrap();
        let nodes: Vec<Vector> = (0..4).map(|i| Vector::from_element(1, 0.3 * i as f64)).collect();
        let g0: Vec<Vector> = nodes.iter().map(|x| x * 0.9).collect();
        let g1: Vec<Vector> = nodes.iter().map(|_| Vector::from_element(1, 0.1)).collect();
        let s = Surrogate::Kernel(kedmd_control_fit(&ker, &nodes, &[g0, g1]).unwrap());
        assert_eq!(from_text(&to_text(&s)).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let s = Surrogate::Bilinear(bilinear(&[1.0; 12], Mode::Operator));
        let text = to_text(&s).replacen("1 1\n", "1 x\n", 1);
        match from_text(&text) {
            Err(Error::Parse { line, .. }) => assert!(line > 8),
            other => panic!("{other:?}"),
        }
        assert!(matches!(from_text("excite-id-surrogate 9\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(from_text(""), Err(Error::Parse { .. })));
    }
}
