//! SDPA sparse format (`.dat-s`) reading and writing.
//!
//! The format describes `min c'x  s.t.  Σ F_i x_i - F_0 ⪰ 0` with a block
//! diagonal structure:
//!
//! ```text
//! m
//! nBlocks
//! s_1 s_2 ...          (negative size = diagonal block)
//! c_1 ... c_m
//! matno blkno i j value
//! ```
//!
//! Programs in LMI form (all variables free, no equalities) map directly.
//! Programs in standard form (cone-tagged variables plus equalities) are
//! written through the SDPA dual `max F_0 • Y  s.t.  F_i • Y = c_i`, with
//! free variables split into nonnegative pairs. Reading always yields the
//! LMI form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::SdpaError;
use crate::ir::{tri_pair, AffineExpr, Cone, ConicProgram, SymmetricExpr};

const CONSTANT_TAG: &str = "*objective_constant";

fn fmt(v: f64) -> String {
    // Print negative zero as "0.0".
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:?}")
}

struct Entry {
    mat: usize,
    block: usize,
    i: usize,
    j: usize,
    value: f64,
}

fn write_file(
    header: &[String],
    block_sizes: &[i64],
    c: &[f64],
    mut entries: Vec<Entry>,
) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "{h}");
    }
    let _ = writeln!(out, "{}", c.len());
    let _ = writeln!(out, "{}", block_sizes.len());
    let sizes: Vec<String> = block_sizes.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let cs: Vec<String> = c.iter().map(|v| fmt(*v)).collect();
    let _ = writeln!(out, "{}", cs.join(" "));
    entries.sort_by_key(|e| (e.mat, e.block, e.i, e.j));
    for e in entries {
        if e.value != 0.0 {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                e.mat,
                e.block,
                e.i + 1,
                e.j + 1,
                fmt(e.value)
            );
        }
    }
    out
}

/// Serialize a program in LMI or standard form.
///
/// Second-order cones are not representable; use [`lower_for_sdpa`] first.
pub fn export_sdpa(p: &ConicProgram) -> Result<String, SdpaError> {
    p.validate()
        .map_err(|e| SdpaError::Unsupported(e.to_string()))?;
    if p.has_soc() {
        return Err(SdpaError::Unsupported(
            "second-order cones must be lowered to PSD blocks".into(),
        ));
    }
    // Reading back a standard-form export yields its dual, whose value is
    // the negated primal value; the stored constant follows that sign.
    let constant = if p.is_lmi_form() {
        p.objective.constant
    } else {
        -p.objective.constant
    };
    let mut header = Vec::new();
    if constant != 0.0 {
        header.push(format!("{CONSTANT_TAG} {}", fmt(constant)));
    }
    if p.is_lmi_form() {
        Ok(export_lmi(p, header))
    } else if p.is_standard_form() {
        export_standard(p, header)
    } else {
        Err(SdpaError::Unsupported(
            "program mixes cone-tagged variables and conic constraints".into(),
        ))
    }
}

fn block_size(cone: Cone) -> i64 {
    match cone {
        Cone::Psd(q) => q as i64,
        Cone::Nonneg(d) | Cone::Free(d) | Cone::Soc(d) => -(d as i64),
    }
}

fn cone_position(cone: Cone, k: usize) -> (usize, usize) {
    match cone {
        Cone::Psd(_) => tri_pair(k),
        _ => (k, k),
    }
}

fn export_lmi(p: &ConicProgram, header: Vec<String>) -> String {
    let m = p.num_vars();
    let mut c = vec![0.0; m];
    for &(v, a) in &p.objective.terms {
        c[v] += a;
    }
    let sizes: Vec<i64> = p.constraints.iter().map(|k| block_size(k.cone)).collect();
    let mut entries = Vec::new();
    for (b, con) in p.constraints.iter().enumerate() {
        for (k, row) in con.rows.iter().enumerate() {
            let (i, j) = cone_position(con.cone, k);
            entries.push(Entry {
                mat: 0,
                block: b + 1,
                i,
                j,
                value: -row.constant,
            });
            for &(v, a) in &row.terms {
                entries.push(Entry {
                    mat: v + 1,
                    block: b + 1,
                    i,
                    j,
                    value: a,
                });
            }
        }
    }
    write_file(&header, &sizes, &c, merge(entries))
}

fn export_standard(p: &ConicProgram, mut header: Vec<String>) -> Result<String, SdpaError> {
    // Y blocks: one per cone-tagged block, plus one diagonal block holding
    // the (positive, negative) parts of all free variables.
    let mut sizes = Vec::new();
    let mut location: Vec<Vec<(usize, usize, usize, f64)>> = vec![Vec::new(); p.num_vars()];
    let mut nblock = 0;
    for b in p.blocks.iter().filter(|b| !b.cone.is_free()) {
        nblock += 1;
        sizes.push(block_size(b.cone));
        for k in 0..b.len() {
            let (i, j) = cone_position(b.cone, k);
            let w = if i == j { 1.0 } else { 0.5 };
            location[b.index(k)].push((nblock, i, j, w));
        }
    }
    let free: Vec<usize> = p
        .blocks
        .iter()
        .filter(|b| b.cone.is_free())
        .flat_map(|b| b.indices())
        .collect();
    if !free.is_empty() {
        nblock += 1;
        sizes.push(-2 * free.len() as i64);
        for (t, &v) in free.iter().enumerate() {
            location[v].push((nblock, 2 * t, 2 * t, 1.0));
            location[v].push((nblock, 2 * t + 1, 2 * t + 1, -1.0));
        }
        header.push(format!("*free variables split into pairs: {}", free.len()));
    }
    let c: Vec<f64> = p.equalities.iter().map(|e| -e.constant).collect();
    let mut entries = Vec::new();
    for &(v, a) in &p.objective.terms {
        for &(blk, i, j, w) in &location[v] {
            entries.push(Entry {
                mat: 0,
                block: blk,
                i,
                j,
                value: -a * w,
            });
        }
    }
    for (r, e) in p.equalities.iter().enumerate() {
        for &(v, a) in &e.terms {
            for &(blk, i, j, w) in &location[v] {
                entries.push(Entry {
                    mat: r + 1,
                    block: blk,
                    i,
                    j,
                    value: a * w,
                });
            }
        }
    }
    if c.is_empty() {
        return Err(SdpaError::Unsupported(
            "standard-form export needs at least one equality".into(),
        ));
    }
    Ok(write_file(&header, &sizes, &c, merge(entries)))
}

fn merge(entries: Vec<Entry>) -> Vec<Entry> {
    let mut map: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    for e in entries {
        *map.entry((e.mat, e.block, e.i, e.j)).or_insert(0.0) += e.value;
    }
    map.into_iter()
        .map(|((mat, block, i, j), value)| Entry {
            mat,
            block,
            i,
            j,
            value,
        })
        .collect()
}

/// Parse an SDPA sparse file into an LMI-form program with one free block `x`.
pub fn import_sdpa(text: &str) -> Result<ConicProgram, SdpaError> {
    let mut constant = 0.0;
    // (line number, cleaned content)
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let t = raw.trim();
        if let Some(rest) = t.strip_prefix(CONSTANT_TAG) {
            constant = rest
                .trim()
                .parse::<f64>()
                .map_err(|_| SdpaError::parse(line_no, "bad objective constant"))?;
            continue;
        }
        if t.is_empty() || t.starts_with('*') || t.starts_with('"') {
            continue;
        }
        let cleaned: String = t
            .chars()
            .map(|ch| if "{}(),=".contains(ch) { ' ' } else { ch })
            .collect();
        lines.push((line_no, cleaned));
    }
    let mut it = lines.into_iter();
    let mut next_line = |what: &str| {
        it.next()
            .ok_or_else(|| SdpaError::parse(text.lines().count() + 1, format!("missing {what}")))
    };
    let (ln, l) = next_line("number of constraints")?;
    let m: usize = first_token(&l)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SdpaError::parse(ln, "expected number of constraints"))?;
    let (ln, l) = next_line("number of blocks")?;
    let nb: usize = first_token(&l)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SdpaError::parse(ln, "expected number of blocks"))?;
    let (ln, l) = next_line("block structure")?;
    let sizes: Vec<i64> = l
        .split_whitespace()
        .take(nb)
        .map(|t| t.parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| SdpaError::parse(ln, "bad block size"))?;
    if sizes.len() != nb || sizes.contains(&0) {
        return Err(SdpaError::parse(
            ln,
            format!("expected {nb} nonzero block sizes"),
        ));
    }
    // The objective vector may wrap over several lines.
    let mut c = Vec::with_capacity(m);
    while c.len() < m {
        let (ln, l) = next_line("objective vector")?;
        for t in l.split_whitespace() {
            if c.len() == m {
                return Err(SdpaError::parse(ln, "too many objective entries"));
            }
            c.push(parse_f64(t).ok_or_else(|| SdpaError::parse(ln, format!("bad number `{t}`")))?);
        }
    }

    let mut mats: Vec<SymmetricExpr> = sizes
        .iter()
        .map(|&s| SymmetricExpr::new(s.unsigned_abs() as usize))
        .collect();
    for (ln, l) in it {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 5 {
            return Err(SdpaError::parse(ln, "expected `matno blkno i j value`"));
        }
        let int = |t: &str, what: &str| {
            t.parse::<usize>()
                .map_err(|_| SdpaError::parse(ln, format!("bad {what} `{t}`")))
        };
        let mat = int(toks[0], "matrix number")?;
        let blk = int(toks[1], "block number")?;
        let i = int(toks[2], "row index")?;
        let j = int(toks[3], "column index")?;
        let value = parse_f64(toks[4])
            .ok_or_else(|| SdpaError::parse(ln, format!("bad value `{}`", toks[4])))?;
        if mat > m {
            return Err(SdpaError::parse(
                ln,
                format!("matrix number {mat} exceeds {m}"),
            ));
        }
        if blk == 0 || blk > nb {
            return Err(SdpaError::parse(
                ln,
                format!("block number {blk} out of range"),
            ));
        }
        let size = sizes[blk - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > size || j > size {
            return Err(SdpaError::parse(
                ln,
                format!("index ({i}, {j}) outside block {blk}"),
            ));
        }
        if sizes[blk - 1] < 0 && i != j {
            return Err(SdpaError::parse(ln, "off-diagonal entry in diagonal block"));
        }
        let entry = mats[blk - 1].entry_mut(i - 1, j - 1);
        if mat == 0 {
            entry.constant -= value;
        } else {
            entry.add_term(mat - 1, value);
        }
    }

    let mut p = ConicProgram::new();
    if m > 0 {
        p.add_free("x", m);
    }
    for (b, (mat, &s)) in mats.into_iter().zip(&sizes).enumerate() {
        let name = format!("block{}", b + 1);
        if s < 0 {
            let d = s.unsigned_abs() as usize;
            let rows: Vec<AffineExpr> = (0..d).map(|k| mat.entry(k, k).clone()).collect();
            p.add_constraint(name, Cone::Nonneg(d), rows);
        } else {
            p.add_constraint(name, Cone::Psd(s as usize), mat.into_rows());
        }
    }
    let mut obj = AffineExpr::constant(constant);
    for (v, &cv) in c.iter().enumerate() {
        obj.add_term(v, cv);
    }
    p.set_objective(obj);
    Ok(p)
}

fn first_token(l: &str) -> Option<&str> {
    l.split_whitespace().next()
}

fn parse_f64(t: &str) -> Option<f64> {
    t.parse::<f64>()
        .ok()
        .or_else(|| t.replace(['d', 'D'], "e").parse().ok())
        .filter(|v: &f64| v.is_finite())
}

/// Rewrite any program into the LMI form accepted by [`export_sdpa`].
///
/// All variables become one free block with unchanged indices. Cone-tagged
/// blocks become conic constraints on their entries, equalities become pairs
/// of opposite inequalities and second-order cones become arrow matrices
/// `[[t, v'], [v, t I]] ⪰ 0`.
pub fn lower_for_sdpa(p: &ConicProgram) -> ConicProgram {
    let mut out = ConicProgram::new();
    out.metadata = p.metadata.clone();
    if p.num_vars() > 0 {
        out.add_free("x", p.num_vars());
    }
    fn push(out: &mut ConicProgram, name: String, cone: Cone, rows: Vec<AffineExpr>) {
        match cone {
            Cone::Soc(d) => {
                let mut m = SymmetricExpr::new(d);
                for k in 0..d {
                    *m.entry_mut(k, k) = rows[0].clone();
                }
                for k in 1..d {
                    *m.entry_mut(0, k) = rows[k].clone();
                }
                out.add_constraint(name, Cone::Psd(d), m.into_rows());
            }
            _ => out.add_constraint(name, cone, rows),
        }
    }
    for b in p.blocks.iter().filter(|b| !b.cone.is_free()) {
        let rows = b.indices().map(AffineExpr::var).collect();
        push(&mut out, b.name.clone(), b.cone, rows);
    }
    if !p.equalities.is_empty() {
        let mut rows = Vec::new();
        for e in &p.equalities {
            rows.push(e.clone());
            rows.push(e.scaled(-1.0));
        }
        let d = rows.len();
        out.add_constraint("equalities", Cone::Nonneg(d), rows);
    }
    for c in &p.constraints {
        push(&mut out, c.name.clone(), c.cone, c.rows.clone());
    }
    out.set_objective(p.objective.clone());
    out
}
