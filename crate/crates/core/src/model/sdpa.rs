//! SDPA sparse format (`.dat-s`).
//!
//! A problem `max obj^T x` s.t. `S_b(x) = C_b + sum_k x_k A_bk in K_b` is
//! written as `min c^T x` s.t. `sum_k x_k F_k - F_0 >= 0` with `c = -obj`,
//! `F_0 = -C`, `F_k = A_k`. Second-order cones become arrow matrices and
//! equalities become pairs of diagonal inequalities collected in one final
//! block, so import recovers the lowered problem, not the original.

use super::{ConeConstraint, ConeKind, ConicProblem, Entry, VarEntry};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Rewrites `p` into the cone kinds SDPA understands.
pub fn lower(p: &ConicProblem) -> ConicProblem {
    let mut out = ConicProblem {
        name: p.name.clone(),
        variables: p.variables.clone(),
        matrix_variables: p.matrix_variables.clone(),
        objective: p.objective.clone(),
        equalities: vec![],
        cones: vec![],
    };
    for c in &p.cones {
        match c.kind {
            ConeKind::Nonneg(_) | ConeKind::Psd(_) => out.cones.push(c.clone()),
            ConeKind::Soc(k) => {
                let mut constant = Vec::new();
                let mut linear = Vec::new();
                for e in &c.constant {
                    if e.i == 0 {
                        constant.extend((0..k).map(|d| Entry { i: d, j: d, v: e.v }));
                    } else {
                        constant.push(Entry { i: 0, j: e.i, v: e.v });
                    }
                }
                for e in &c.linear {
                    if e.i == 0 {
                        linear.extend((0..k).map(|d| VarEntry { var: e.var, i: d, j: d, v: e.v }));
                    } else {
                        linear.push(VarEntry { var: e.var, i: 0, j: e.i, v: e.v });
                    }
                }
                out.cones.push(ConeConstraint { label: c.label.clone(), kind: ConeKind::Psd(k), constant, linear });
            }
        }
    }
    if !p.equalities.is_empty() {
        let mut constant = Vec::new();
        let mut linear = Vec::new();
        for (q, eq) in p.equalities.iter().enumerate() {
            let (lo, hi) = (2 * q, 2 * q + 1);
            if eq.rhs != 0.0 {
                constant.push(Entry { i: lo, j: 0, v: -eq.rhs });
                constant.push(Entry { i: hi, j: 0, v: eq.rhs });
            }
            for &(var, v) in &eq.terms {
                linear.push(VarEntry { var, i: lo, j: 0, v });
                linear.push(VarEntry { var, i: hi, j: 0, v: -v });
            }
        }
        out.cones.push(ConeConstraint {
            label: "equalities".into(),
            kind: ConeKind::Nonneg(2 * p.equalities.len()),
            constant,
            linear,
        });
    }
    out
}

type Quintuples = BTreeMap<(usize, usize, usize, usize), f64>;

fn quintuples(p: &ConicProblem) -> Result<Quintuples> {
    let mut q: Quintuples = BTreeMap::new();
    for (b, c) in p.cones.iter().enumerate() {
        let diag = match c.kind {
            ConeKind::Nonneg(_) => true,
            ConeKind::Psd(_) => false,
            ConeKind::Soc(_) => return Err(Error::UnsupportedCone(format!("soc block '{}' must be lowered first", c.label))),
        };
        let key = |mat: usize, i: usize, j: usize| if diag { (mat, b + 1, i + 1, i + 1) } else { (mat, b + 1, i + 1, j + 1) };
        for e in &c.constant {
            *q.entry(key(0, e.i, e.j)).or_insert(0.0) -= e.v;
        }
        for e in &c.linear {
            *q.entry(key(e.var + 1, e.i, e.j)).or_insert(0.0) += e.v;
        }
    }
    q.retain(|_, v| *v != 0.0);
    Ok(q)
}

/// Writes `p` (after [`lower`]) as SDPA sparse text.
pub fn export_sdpa(p: &ConicProblem) -> Result<String> {
    p.validate()?;
    let l = lower(p);
    let m = l.num_vars();
    let mut c = vec![0.0; m];
    for &(v, w) in &l.objective {
        c[v] -= w;
    }
    let mut s = String::new();
    s.push_str(&format!("{m}\n{}\n", l.cones.len()));
    let sizes: Vec<String> = l
        .cones
        .iter()
        .map(|b| match b.kind {
            ConeKind::Nonneg(k) => format!("-{k}"),
            ConeKind::Psd(k) | ConeKind::Soc(k) => k.to_string(),
        })
        .collect();
    s.push_str(&sizes.join(" "));
    s.push('\n');
    s.push_str(&c.iter().map(|v| fmt_f64(*v + 0.0)).collect::<Vec<_>>().join(" "));
    s.push('\n');
    for ((mat, blk, i, j), v) in quintuples(&l)? {
        s.push_str(&format!("{mat} {blk} {i} {j} {}\n", fmt_f64(v)));
    }
    Ok(s)
}

pub fn write_sdpa(p: &ConicProblem, path: &Path) -> Result<()> {
    std::fs::write(path, export_sdpa(p)?)?;
    Ok(())
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokenize(src: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut header_started = false;
    for (ln, line) in src.lines().enumerate() {
        let trimmed = line.trim_start();
        if !header_started && (trimmed.starts_with('"') || trimmed.starts_with('*')) {
            continue;
        }
        let mut start = None;
        for (col, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            let sep = ch.is_whitespace() || matches!(ch, ',' | '{' | '}' | '(' | ')');
            match (sep, start) {
                (false, None) => start = Some(col),
                (true, Some(s)) => {
                    out.push(Token { text: &line[s..col], line: ln + 1, column: s + 1 });
                    header_started = true;
                    start = None;
                }
                _ => {}
            }
        }
    }
    out
}

struct Reader<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    eof_line: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Parse { line, column, message: message.into() }
    }

    fn next<T: std::str::FromStr>(&mut self, what: &str) -> Result<(T, usize, usize)> {
        let Some(t) = self.toks.get(self.pos) else {
            return Err(self.err(self.eof_line, 1, format!("unexpected end of file, expected {what}")));
        };
        self.pos += 1;
        let v = t.text.parse::<T>().map_err(|_| self.err(t.line, t.column, format!("expected {what}, found '{}'", t.text)))?;
        Ok((v, t.line, t.column))
    }
}

/// Parses SDPA sparse text into a problem made of `Nonneg` and `Psd` blocks.
pub fn import_sdpa(src: &str) -> Result<ConicProblem> {
    let mut rd = Reader { toks: tokenize(src), pos: 0, eof_line: src.lines().count().max(1) };
    let (m, ..) = rd.next::<usize>("number of constraints")?;
    let (nb, ..) = rd.next::<usize>("number of blocks")?;
    let mut kinds = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (s, line, col) = rd.next::<i64>("block size")?;
        kinds.push(match s {
            0 => return Err(rd.err(line, col, "block size 0")),
            s if s < 0 => ConeKind::Nonneg((-s) as usize),
            s => ConeKind::Psd(s as usize),
        });
    }
    let mut p = ConicProblem::new("imported");
    for k in 0..m {
        p.add_var(format!("x{}", k + 1));
        let (c, ..) = rd.next::<f64>("objective coefficient")?;
        if c != 0.0 {
            p.objective.push((k, -c));
        }
    }
    let mut blocks: Vec<ConeConstraint> = kinds
        .iter()
        .enumerate()
        .map(|(b, kind)| ConeConstraint { label: format!("block{}", b + 1), kind: *kind, constant: vec![], linear: vec![] })
        .collect();
    while rd.pos < rd.toks.len() {
        let (mat, l0, c0) = rd.next::<usize>("matrix number")?;
        let (blk, l1, c1) = rd.next::<usize>("block number")?;
        let (mut i, l2, c2) = rd.next::<usize>("row index")?;
        let (mut j, l3, c3) = rd.next::<usize>("column index")?;
        let (v, ..) = rd.next::<f64>("value")?;
        if mat > m {
            return Err(rd.err(l0, c0, format!("matrix number {mat} exceeds {m}")));
        }
        if blk == 0 || blk > nb {
            return Err(rd.err(l1, c1, format!("block number {blk} outside 1..={nb}")));
        }
        let kind = kinds[blk - 1];
        let size = kind.size();
        if i == 0 || i > size {
            return Err(rd.err(l2, c2, format!("row {i} outside block of size {size}")));
        }
        if j == 0 || j > size {
            return Err(rd.err(l3, c3, format!("column {j} outside block of size {size}")));
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let (i, j) = match kind {
            ConeKind::Nonneg(_) => {
                if i != j {
                    return Err(rd.err(l3, c3, "off-diagonal entry in a diagonal block"));
                }
                (i - 1, 0)
            }
            _ => (i - 1, j - 1),
        };
        let b = &mut blocks[blk - 1];
        if mat == 0 {
            b.constant.push(Entry { i, j, v: -v });
        } else {
            b.linear.push(VarEntry { var: mat - 1, i, j, v });
        }
    }
    p.cones = blocks;
    Ok(p)
}

pub fn read_sdpa(path: &Path) -> Result<ConicProblem> {
    import_sdpa(&std::fs::read_to_string(path)?)
}

/// Objective and cone coefficients, with names and entry order dropped.
pub type CanonicalForm = (BTreeMap<usize, f64>, Vec<(ConeKind, BTreeMap<(usize, usize, usize), f64>)>);

/// Canonical coefficient view used to compare problems up to naming.
pub fn canonical(p: &ConicProblem) -> CanonicalForm {
    let mut obj = BTreeMap::new();
    for &(v, w) in &p.objective {
        *obj.entry(v).or_insert(0.0) += w;
    }
    obj.retain(|_, w: &mut f64| *w != 0.0);
    let cones = p
        .cones
        .iter()
        .map(|c| {
            let mut m = BTreeMap::new();
            for e in &c.constant {
                *m.entry((0, e.i, e.j)).or_insert(0.0) += e.v;
            }
            for e in &c.linear {
                *m.entry((e.var + 1, e.i, e.j)).or_insert(0.0) += e.v;
            }
            m.retain(|_, v: &mut f64| *v != 0.0);
            (c.kind, m)
        })
        .collect();
    (obj, cones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AffineMat;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    #[test]
    fn empty_problem_is_header_only() {
        let s = export_sdpa(&ConicProblem::new("e")).unwrap();
        assert_eq!(s, "0\n0\n\n\n");
        let p = import_sdpa(&s).unwrap();
        assert_eq!(p.num_vars(), 0);
        assert!(p.cones.is_empty());
    }

    #[test]
    fn one_psd_block_one_variable() {
        let mut p = ConicProblem::new("t");
        let y = p.add_var("y");
        p.maximize(vec![(y, 1.0)]);
        let e = AffineMat::constant(DMatrix::identity(2, 2)).with_term(y, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        p.add_cone_affine("c", ConeKind::Psd(2), &e);
        let s = export_sdpa(&p).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines, vec!["1", "1", "2", "-1", "0 1 1 1 -1", "0 1 2 2 -1", "1 1 1 2 1"]);
    }

    fn random_problem(seed: u64) -> ConicProblem {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = ConicProblem::new("r");
        let nv = rng.random_range(1..5);
        for k in 0..nv {
            p.add_var(format!("v{k}"));
        }
        p.maximize((0..nv).map(|k| (k, rng.random_range(-1.0..1.0))).collect());
        for b in 0..3 {
            let kind = match b {
                0 => ConeKind::Nonneg(2),
                1 => ConeKind::Soc(3),
                _ => ConeKind::Psd(3),
            };
            let cols = if matches!(kind, ConeKind::Psd(_)) { 3 } else { 1 };
            let rm = |rng: &mut rand_chacha::ChaCha8Rng| {
                let m = DMatrix::from_fn(kind.size(), cols, |_, _| rng.random::<f64>() * 1e-3 + rng.random_range(-3.0..3.0));
                if cols > 1 {
                    (&m + m.transpose()) * 0.5
                } else {
                    m
                }
            };
            let mut e = AffineMat::constant(rm(&mut rng));
            for k in 0..nv {
                e = e.with_term(k, rm(&mut rng));
            }
            p.add_cone_affine(format!("b{b}"), kind, &e);
        }
        p.add_equality("e0", vec![(0, 1.5), (nv - 1, 1e-7)], 0.1);
        p
    }

    #[test]
    fn round_trip_on_generated_corpus() {
        for seed in 0..3 {
            let p = random_problem(seed);
            let s = export_sdpa(&p).unwrap();
            let q = import_sdpa(&s).unwrap();
            assert_eq!(canonical(&q), canonical(&lower(&p)), "seed {seed}");
            assert_eq!(export_sdpa(&q).unwrap(), s);
        }
    }

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn malformed_input_reports_position() {
        let err = import_sdpa("1\n1\n2\n1.0\n1 1 1 x 2.0\n").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (5, 7)),
            e => panic!("{e}"),
        }
        let err = import_sdpa("1\n1\n2\n1.0\n1 2 1 1 2.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, column: 3, .. }));
        assert!(matches!(import_sdpa("1\n1\n").unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn accepts_punctuation_and_comments() {
        let p = import_sdpa("\"comment\n1 = m\n2\n{2, -1}\n(1.0)\n0 1 1 1 1.0\n1 2 1 1 1\n").unwrap_err();
        // "= m" is not a number
        assert!(matches!(p, Error::Parse { line: 2, .. }));
        let p = import_sdpa("\"comment\n1\n2\n{2, -1}\n(1.0)\n0 1 1 1 1.0\n1 2 1 1 1\n").unwrap();
        assert_eq!(p.cones.len(), 2);
        assert_eq!(p.cones[1].kind, ConeKind::Nonneg(1));
    }
}
