//! Class-set / double-coset data: the combinatorial input from which Hecke
//! operators on H^0 = M^{(+)t} are assembled. Datasets are ingested from a
//! small text format or synthesized; the module validates the monoid
//! membership conditions but never computes class sets itself.
//!
//! # Dataset file format (v1)
//!
//! Whitespace-separated tokens, line-oriented for readability:
//!
//! ```text
//! uvhalo-dataset v1
//! p <prime>
//! d <number of places above p>
//! t <class-set size>
//! w <central weight>
//! k <d-1 integers: fixed weights at the non-distinguished places>
//! provenance <ingested | synthetic <seed>>
//! datum <name> <n_items>
//! item <t integers: sigma(0..t-1)>
//! mat <a@N> <b@N> <c@N> <d@N>     (d lines per item, one per place)
//! ...
//! end
//! ```
//!
//! Matrix entries are integers at explicit precision (`value@N` means the
//! residue mod p^N). Naming convention: `Uv` is the U-operator at the
//! distinguished place (exactly p items); `Uv<j>` (j >= 2) is the
//! U-operator at place j-1; any other name (`Tw17`, `Sw5`, ...) is an
//! away-from-p operator with unit determinants everywhere. Canonical
//! serialization sorts data by name and keeps items in order.

use crate::padic::{Padic, PadicRing};
use crate::rat::{PrecVal, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("parse error at token {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("dataset invalid: {0}")]
    Invalid(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
}

#[derive(Clone, Debug)]
pub struct Mat2 {
    pub a: Padic,
    pub b: Padic,
    pub c: Padic,
    pub d: Padic,
}

impl Mat2 {
    pub fn det(&self) -> Padic {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    pub fn from_ints(ring: &PadicRing, e: [i64; 4], prec: u32) -> Mat2 {
        Mat2 {
            a: ring.int(e[0], prec),
            b: ring.int(e[1], prec),
            c: ring.int(e[2], prec),
            d: ring.int(e[3], prec),
        }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a.mul(&o.a).add(&self.b.mul(&o.c)),
            b: self.a.mul(&o.b).add(&self.b.mul(&o.d)),
            c: self.c.mul(&o.a).add(&self.d.mul(&o.c)),
            d: self.c.mul(&o.b).add(&self.d.mul(&o.d)),
        }
    }

    pub fn entries(&self) -> [&Padic; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

/// One single-coset contribution: a class-index map and one matrix per place
/// above p.
#[derive(Clone, Debug)]
pub struct CosetItem {
    pub perm: Vec<usize>,
    pub mats: Vec<Mat2>,
}

#[derive(Clone, Debug)]
pub struct HeckeDatum {
    pub name: String,
    pub items: Vec<CosetItem>,
}

impl HeckeDatum {
    /// Index of the place (0-based) at which this datum is a U-operator, if
    /// any: "Uv" -> 0, "Uv<j>" -> j-1.
    pub fn u_place(&self) -> Option<usize> {
        if self.name == "Uv" {
            return Some(0);
        }
        self.name
            .strip_prefix("Uv")
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&j| j >= 2)
            .map(|j| j - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    Ingested,
    Synthetic { seed: u64 },
}

#[derive(Clone, Debug)]
pub struct CosetDataset {
    pub p: u64,
    pub d: usize,
    pub t_base: usize,
    pub w: i64,
    /// Fixed weights at the d-1 non-distinguished places above p.
    pub k_list: Vec<i64>,
    pub data: Vec<HeckeDatum>,
    pub provenance: Provenance,
}

impl CosetDataset {
    pub fn datum(&self, name: &str) -> Option<&HeckeDatum> {
        self.data.iter().find(|d| d.name == name)
    }

    /// t' = t * prod (k_{v'} - 1), the rank factor of the coefficient module.
    pub fn t_prime(&self) -> usize {
        self.t_base * self.k_list.iter().map(|&k| (k - 1) as usize).product::<usize>()
    }

    /// SHA-256 of the canonical serialization, hex-encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serialize_dataset(self).as_bytes());
        let digest = h.finalize();
        let mut out = String::new();
        for b in digest {
            write!(out, "{:02x}", b).unwrap();
        }
        out
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Clone, Debug)]
pub struct Violation {
    pub datum: String,
    pub item: usize,
    pub place: usize,
    pub condition: String,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn val_ge(x: &Padic, bound: Rat) -> bool {
    match x.val() {
        PrecVal::Exact(v) => v >= bound,
        PrecVal::AtLeast(v) => v >= bound,
    }
}

fn is_unit(x: &Padic) -> bool {
    matches!(x.val(), PrecVal::Exact(v) if v == Rat::zero())
}

/// Per-item membership checks: integrality everywhere; Iwahori shape (a a
/// unit, c = 0 mod p) at the distinguished place; determinant valuation 1+ at
/// the U-place of a U-type datum and 0 elsewhere. Report-only.
pub fn validate_dataset(ds: &CosetDataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |datum: &str, item: usize, place: usize, condition: &str| {
        report.violations.push(Violation {
            datum: datum.to_string(),
            item,
            place,
            condition: condition.to_string(),
        });
    };
    if ds.t_base == 0 {
        push("<header>", 0, 0, "t must be >= 1");
    }
    if ds.k_list.len() + 1 != ds.d {
        push("<header>", 0, 0, "k list must have d-1 entries");
    }
    for &k in &ds.k_list {
        if k < 2 {
            push("<header>", 0, 0, "fixed weights must be >= 2");
        }
        if (k - ds.w).rem_euclid(2) != 0 {
            push("<header>", 0, 0, "fixed weight parity must match w");
        }
    }
    for datum in &ds.data {
        let u_place = datum.u_place();
        if u_place == Some(0) && datum.items.len() != ds.p as usize {
            push(&datum.name, 0, 0, "U_v datum must have exactly p items");
        }
        if let Some(pl) = u_place {
            if pl >= ds.d {
                push(&datum.name, 0, pl, "U-place index out of range");
                continue;
            }
        }
        for (i, item) in datum.items.iter().enumerate() {
            if item.perm.len() != ds.t_base {
                push(&datum.name, i, 0, "index map must have t entries");
            }
            for &s in &item.perm {
                if s >= ds.t_base {
                    push(&datum.name, i, 0, "index map entry out of range");
                }
            }
            if item.mats.len() != ds.d {
                push(&datum.name, i, 0, "item must carry one matrix per place");
                continue;
            }
            for (pl, m) in item.mats.iter().enumerate() {
                for x in m.entries() {
                    if !val_ge(x, Rat::zero()) {
                        push(&datum.name, i, pl, "entries must be integral");
                    }
                }
                if pl == 0 {
                    if !is_unit(&m.a) {
                        push(&datum.name, i, pl, "Iwahori condition: a must be a unit");
                    }
                    if !val_ge(&m.c, Rat::int(1)) {
                        push(&datum.name, i, pl, "Iwahori condition: c must be 0 mod p");
                    }
                }
                let det = m.det();
                if u_place == Some(pl) {
                    if !val_ge(&det, Rat::int(1)) {
                        push(
                            &datum.name,
                            i,
                            pl,
                            "U-type component must have det of valuation >= 1",
                        );
                    }
                } else if !is_unit(&det) {
                    push(&datum.name, i, pl, "component must have unit det");
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// serialization

fn fmt_entry(x: &Padic, out: &mut String) {
    let prec = x.abs_precision().max(0);
    let v = x.residue_i128().unwrap_or(0);
    write!(out, " {}@{}", v, prec).unwrap();
}

/// Canonical text form: data sorted by name, residues reduced, fixed field
/// order. parse(serialize(ds)) round-trips exactly.
pub fn serialize_dataset(ds: &CosetDataset) -> String {
    let mut out = String::new();
    out.push_str("uvhalo-dataset v1\n");
    writeln!(out, "p {}", ds.p).unwrap();
    writeln!(out, "d {}", ds.d).unwrap();
    writeln!(out, "t {}", ds.t_base).unwrap();
    writeln!(out, "w {}", ds.w).unwrap();
    out.push('k');
    for k in &ds.k_list {
        write!(out, " {}", k).unwrap();
    }
    out.push('\n');
    match &ds.provenance {
        Provenance::Ingested => out.push_str("provenance ingested\n"),
        Provenance::Synthetic { seed } => writeln!(out, "provenance synthetic {}", seed).unwrap(),
    }
    let mut data: Vec<&HeckeDatum> = ds.data.iter().collect();
    data.sort_by(|a, b| a.name.cmp(&b.name));
    for datum in data {
        writeln!(out, "datum {} {}", datum.name, datum.items.len()).unwrap();
        for item in &datum.items {
            out.push_str("item");
            for &s in &item.perm {
                write!(out, " {}", s).unwrap();
            }
            out.push('\n');
            for m in &item.mats {
                out.push_str("mat");
                for x in m.entries() {
                    fmt_entry(x, &mut out);
                }
                out.push('\n');
            }
        }
    }
    out.push_str("end\n");
    out
}

struct Tokens<'a> {
    toks: Vec<&'a str>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str, DatasetError> {
        let t = self.toks.get(self.pos).copied().ok_or(DatasetError::Parse {
            pos: self.pos,
            msg: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, kw: &str) -> Result<(), DatasetError> {
        let t = self.next()?;
        if t != kw {
            return Err(DatasetError::Parse {
                pos: self.pos - 1,
                msg: format!("expected '{}', found '{}'", kw, t),
            });
        }
        Ok(())
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T, DatasetError> {
        let t = self.next()?;
        t.parse().map_err(|_| DatasetError::Parse {
            pos: self.pos - 1,
            msg: format!("expected integer, found '{}'", t),
        })
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }
}

fn parse_entry(tok: &str, ring: &PadicRing, pos: usize) -> Result<Padic, DatasetError> {
    let (v, prec) = tok.split_once('@').ok_or(DatasetError::Parse {
        pos,
        msg: format!("expected value@prec, found '{}'", tok),
    })?;
    let v: i64 = v.parse().map_err(|_| DatasetError::Parse {
        pos,
        msg: format!("bad entry value '{}'", v),
    })?;
    let prec: u32 = prec.parse().map_err(|_| DatasetError::Parse {
        pos,
        msg: format!("bad entry precision '{}'", prec),
    })?;
    if prec == 0 {
        return Ok(ring.zero(0));
    }
    Ok(ring.int(v, prec))
}

/// Parse and validate; any membership violation is an error listing the
/// first offending item and condition.
pub fn parse_dataset(text: &str) -> Result<CosetDataset, DatasetError> {
    let ds = parse_dataset_unchecked(text)?;
    let report = validate_dataset(&ds);
    if let Some(v) = report.violations.first() {
        return Err(DatasetError::Invalid(format!(
            "datum '{}' item {} place {}: {} ({} violations total)",
            v.datum,
            v.item,
            v.place,
            v.condition,
            report.violations.len()
        )));
    }
    Ok(ds)
}

/// Parse without the membership validation (the validator consumes this).
pub fn parse_dataset_unchecked(text: &str) -> Result<CosetDataset, DatasetError> {
    let mut tk = Tokens {
        toks: text.split_whitespace().collect(),
        pos: 0,
    };
    tk.expect("uvhalo-dataset")?;
    tk.expect("v1")?;
    tk.expect("p")?;
    let p: u64 = tk.int()?;
    let ring = PadicRing::qp(p).map_err(|e| DatasetError::Invalid(e.to_string()))?;
    tk.expect("d")?;
    let d: usize = tk.int()?;
    if d == 0 || d > 8 {
        return Err(DatasetError::Invalid("d must be in 1..=8".into()));
    }
    tk.expect("t")?;
    let t_base: usize = tk.int()?;
    tk.expect("w")?;
    let w: i64 = tk.int()?;
    tk.expect("k")?;
    let mut k_list = Vec::new();
    for _ in 1..d {
        k_list.push(tk.int()?);
    }
    tk.expect("provenance")?;
    let provenance = match tk.next()? {
        "ingested" => Provenance::Ingested,
        "synthetic" => Provenance::Synthetic { seed: tk.int()? },
        other => {
            return Err(DatasetError::Parse {
                pos: tk.pos - 1,
                msg: format!("unknown provenance '{}'", other),
            })
        }
    };
    let mut data = Vec::new();
    loop {
        match tk.next()? {
            "end" => break,
            "datum" => {}
            other => {
                return Err(DatasetError::Parse {
                    pos: tk.pos - 1,
                    msg: format!("expected 'datum' or 'end', found '{}'", other),
                })
            }
        }
        let name = tk.next()?.to_string();
        let n_items: usize = tk.int()?;
        if n_items > 10_000 {
            return Err(DatasetError::Invalid("item count cap exceeded".into()));
        }
        let mut items = Vec::with_capacity(n_items);
        for _ in 0..n_items {
            tk.expect("item")?;
            let mut perm = Vec::with_capacity(t_base);
            for _ in 0..t_base {
                perm.push(tk.int()?);
            }
            let mut mats = Vec::with_capacity(d);
            for _ in 0..d {
                tk.expect("mat")?;
                let mut e = Vec::with_capacity(4);
                for _ in 0..4 {
                    let pos = tk.pos;
                    e.push(parse_entry(tk.next()?, &ring, pos)?);
                }
                mats.push(Mat2 {
                    a: e[0].clone(),
                    b: e[1].clone(),
                    c: e[2].clone(),
                    d: e[3].clone(),
                });
            }
            items.push(CosetItem { perm, mats });
        }
        data.push(HeckeDatum { name, items });
    }
    if tk.peek().is_some() {
        return Err(DatasetError::Parse {
            pos: tk.pos,
            msg: "trailing tokens after 'end'".into(),
        });
    }
    data.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(CosetDataset {
        p,
        d,
        t_base,
        w,
        k_list,
        data,
        provenance,
    })
}

// ---------------------------------------------------------------------------
// synthesis

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub p: u64,
    pub d: usize,
    pub t: usize,
    pub w: i64,
    pub k_list: Vec<i64>,
    /// Number of extra away-from-p data beyond the U-operators.
    pub n_away: usize,
    /// Store precision for matrix entries (v_p units).
    pub n_store: u32,
    /// When false, U-items are the bare representatives [[1,0],[p i, p]]
    /// and index maps are identities.
    pub perturb: bool,
}

fn random_perm(rng: &mut ChaCha8Rng, t: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..t).collect();
    for i in (1..t).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
    v
}

fn random_iwahori(rng: &mut ChaCha8Rng, ring: &PadicRing, prec: u32) -> Mat2 {
    let p = ring.p() as i64;
    let cap = (p as i128).pow(prec.min(12)) as i64;
    loop {
        let a = rng.gen_range(0..cap);
        let b = rng.gen_range(0..cap);
        let c = p * rng.gen_range(0..cap / p.max(1));
        let d = rng.gen_range(0..cap);
        if a % p == 0 || (a * d - b * c) % p == 0 {
            continue;
        }
        return Mat2::from_ints(ring, [a, b, c, d], prec);
    }
}

fn random_gl2(rng: &mut ChaCha8Rng, ring: &PadicRing, prec: u32) -> Mat2 {
    let p = ring.p() as i64;
    let cap = (p as i128).pow(prec.min(12)) as i64;
    loop {
        let e = [
            rng.gen_range(0..cap),
            rng.gen_range(0..cap),
            rng.gen_range(0..cap),
            rng.gen_range(0..cap),
        ];
        if (e[0] * e[3] - e[1] * e[2]) % p != 0 {
            return Mat2::from_ints(ring, e, prec);
        }
    }
}

/// Deterministic-in-seed synthetic dataset: a U_v datum with p items of the
/// form [[1,0],[p i, p]] * u_i (u_i in the Iwahori subgroup), a U-datum per
/// non-distinguished place, and `n_away` away-from-p data.
pub fn gen_synthetic(seed: u64, params: &SynthParams) -> Result<CosetDataset, DatasetError> {
    let SynthParams {
        p,
        d,
        t,
        w,
        ref k_list,
        n_away,
        n_store,
        perturb,
    } = *params;
    if t == 0 || d == 0 {
        return Err(DatasetError::BadParams("t and d must be >= 1".into()));
    }
    if k_list.len() + 1 != d {
        return Err(DatasetError::BadParams("k_list must have d-1 entries".into()));
    }
    for &k in k_list {
        if k < 2 || (k - w).rem_euclid(2) != 0 {
            return Err(DatasetError::BadParams(
                "fixed weights must be >= 2 with parity matching w".into(),
            ));
        }
    }
    let ring = PadicRing::qp(p).map_err(|e| DatasetError::BadParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();

    let u_datum_at = |rng: &mut ChaCha8Rng, place: usize| -> HeckeDatum {
        let name = if place == 0 {
            "Uv".to_string()
        } else {
            format!("Uv{}", place + 1)
        };
        let items = (0..p as i64)
            .map(|i| {
                let rep = Mat2::from_ints(&ring, [1, 0, p as i64 * i, p as i64], n_store);
                let mats = (0..d)
                    .map(|pl| {
                        if pl == place {
                            if perturb {
                                rep.mul(&random_iwahori(rng, &ring, n_store))
                            } else {
                                rep.clone()
                            }
                        } else if perturb {
                            if pl == 0 {
                                random_iwahori(rng, &ring, n_store)
                            } else {
                                random_gl2(rng, &ring, n_store)
                            }
                        } else {
                            Mat2::from_ints(&ring, [1, 0, 0, 1], n_store)
                        }
                    })
                    .collect();
                let perm = if perturb {
                    random_perm(rng, t)
                } else {
                    (0..t).collect()
                };
                CosetItem { perm, mats }
            })
            .collect();
        HeckeDatum { name, items }
    };

    for place in 0..d {
        data.push(u_datum_at(&mut rng, place));
    }
    for j in 0..n_away {
        let n_items = rng.gen_range(1..=3);
        let items = (0..n_items)
            .map(|_| {
                let mats = (0..d)
                    .map(|pl| {
                        if pl == 0 {
                            random_iwahori(&mut rng, &ring, n_store)
                        } else {
                            random_gl2(&mut rng, &ring, n_store)
                        }
                    })
                    .collect();
                CosetItem {
                    perm: random_perm(&mut rng, t),
                    mats,
                }
            })
            .collect();
        data.push(HeckeDatum {
            name: format!("Tw{}", j + 1),
            items,
        });
    }
    data.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(CosetDataset {
        p,
        d,
        t_base: t,
        w,
        k_list: k_list.clone(),
        data,
        provenance: Provenance::Synthetic { seed },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_params() -> SynthParams {
        SynthParams {
            p: 3,
            d: 1,
            t: 1,
            w: 0,
            k_list: vec![],
            n_away: 1,
            n_store: 20,
            perturb: true,
        }
    }

    #[test]
    fn standard_datum_without_perturbation() {
        let mut params = base_params();
        params.perturb = false;
        params.n_away = 0;
        let ds = gen_synthetic(0, &params).unwrap();
        let uv = ds.datum("Uv").unwrap();
        assert_eq!(uv.items.len(), 3);
        let r = PadicRing::qp(3).unwrap();
        for (i, item) in uv.items.iter().enumerate() {
            let m = &item.mats[0];
            assert!(m.a.congruent(&r.int(1, 20)));
            assert!(m.b.is_zero_at_precision());
            assert!(m.c.congruent(&r.int(3 * i as i64, 20)));
            assert!(m.d.congruent(&r.int(3, 20)));
        }
    }

    #[test]
    fn round_trip_and_determinism() {
        let params = SynthParams {
            d: 2,
            t: 2,
            k_list: vec![2],
            ..base_params()
        };
        let ds1 = gen_synthetic(7, &params).unwrap();
        let ds2 = gen_synthetic(7, &params).unwrap();
        let s1 = serialize_dataset(&ds1);
        assert_eq!(s1, serialize_dataset(&ds2));
        let reparsed = parse_dataset(&s1).unwrap();
        assert_eq!(s1, serialize_dataset(&reparsed));
        assert_eq!(ds1.hash(), reparsed.hash());
        let other = gen_synthetic(8, &params).unwrap();
        assert_ne!(s1, serialize_dataset(&other));
    }

    #[test]
    fn synthetic_always_validates() {
        for seed in 0..60 {
            let params = SynthParams {
                d: 1 + (seed as usize % 2),
                t: 1 + (seed as usize % 3),
                k_list: if seed % 2 == 1 { vec![2] } else { vec![] },
                ..base_params()
            };
            let ds = gen_synthetic(seed, &params).unwrap();
            let report = validate_dataset(&ds);
            assert!(report.ok(), "seed {}: {:?}", seed, report.violations);
        }
    }

    #[test]
    fn validator_flags_bad_items() {
        let mut params = base_params();
        params.perturb = false;
        params.n_away = 0;
        let mut ds = gen_synthetic(0, &params).unwrap();
        let r = PadicRing::qp(3).unwrap();
        // c not 0 mod p at the distinguished place
        ds.data[0].items[0].mats[0].c = r.int(1, 20);
        let report = validate_dataset(&ds);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition.contains("c must be 0 mod p")));
        // unit determinant where valuation >= 1 is required
        let mut ds = gen_synthetic(0, &params).unwrap();
        ds.data[0].items[1].mats[0] = Mat2::from_ints(&r, [1, 0, 3, 1], 20);
        let report = validate_dataset(&ds);
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition.contains("det of valuation >= 1")));
        // parse_dataset refuses invalid data with a located message
        let text = serialize_dataset(&ds);
        let err = parse_dataset(&text).unwrap_err();
        assert!(matches!(err, DatasetError::Invalid(_)));
    }

    #[test]
    fn u_place_naming() {
        let d = |name: &str| HeckeDatum {
            name: name.into(),
            items: vec![],
        };
        assert_eq!(d("Uv").u_place(), Some(0));
        assert_eq!(d("Uv2").u_place(), Some(1));
        assert_eq!(d("Uv3").u_place(), Some(2));
        assert_eq!(d("Tw17").u_place(), None);
        assert_eq!(d("Sw5").u_place(), None);
    }
}
