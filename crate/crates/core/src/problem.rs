//! Declarative kernel problems: PDE terms, boundary constraints on affine
//! lines, an optional two-region split, and the localization shift.
//!
//! Coordinates. Coefficient expressions are always functions of the global
//! variables `x` and `xi`. Boundary lines, matching lines and integral lower
//! limits are stored in local coordinates relative to `center`, i.e. a line
//! `(alpha, gamma)` means `xi~ = alpha x~ + gamma` with `x~ = x - x0`,
//! `xi~ = xi - xi0`. With the default center `(0, 0)` both coincide.
//! The split line `xi = beta x` is in global coordinates.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expr::CoeffExpr;
use crate::taylor::expand;

#[derive(Debug, Clone, PartialEq)]
pub struct PdeTerm {
    pub kernel: usize,
    /// Factor in `x`; `None` means 1.
    pub a: Option<CoeffExpr>,
    /// Factor in `xi`; `None` means 1.
    pub b: Option<CoeffExpr>,
    /// Derivative orders `(p, q)` of `∂x^p ∂xi^q`.
    pub deriv: (usize, usize),
    pub weight: f64,
}

impl PdeTerm {
    pub fn new(kernel: usize, deriv: (usize, usize), weight: f64) -> Self {
        PdeTerm {
            kernel,
            a: None,
            b: None,
            deriv,
            weight,
        }
    }

    pub fn with_a(mut self, a: CoeffExpr) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_b(mut self, b: CoeffExpr) -> Self {
        self.b = Some(b);
        self
    }
}

/// `Σ terms = 0` on the (sub)domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeConstraint {
    pub terms: Vec<PdeTerm>,
}

impl PdeConstraint {
    /// Largest total derivative order among the terms.
    pub fn max_order(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.deriv.0 + t.deriv.1)
            .max()
            .unwrap_or(0)
    }
}

/// The line `xi~ = alpha x~ + gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub alpha: f64,
    pub gamma: f64,
}

impl Line {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        Line { alpha, gamma }
    }

    /// The same line after moving the center by `(dx, dxi)`.
    pub fn shifted(self, dx: f64, dxi: f64) -> Line {
        Line {
            alpha: self.alpha,
            gamma: self.alpha * dx + self.gamma - dxi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcTerm {
    pub kernel: usize,
    /// Factor in `x`; `None` means 1.
    pub c: Option<CoeffExpr>,
    /// 0 for `K(x, xi(x))`, 1 for `d/dx K(x, xi(x))`.
    pub trace_deriv: usize,
}

impl BcTerm {
    pub fn new(kernel: usize, trace_deriv: usize) -> Self {
        BcTerm {
            kernel,
            c: None,
            trace_deriv,
        }
    }

    pub fn with_c(mut self, c: CoeffExpr) -> Self {
        self.c = Some(c);
        self
    }
}

/// `scale · ∫_lower^xi~ integrand(s) ds`, evaluated on the constraint's line.
/// The integrand is a function of the global `xi`; `lower` is local.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralRhs {
    pub integrand: CoeffExpr,
    pub lower: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BcRhs {
    /// `g(x)`, a function of the global `x`.
    Expr(CoeffExpr),
    Integral(IntegralRhs),
}

/// `Σ c_k(x) (d/dx)^t K_k(x, xi(x)) = rhs` along a line.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConstraint {
    pub line: Line,
    pub terms: Vec<BcTerm>,
    pub rhs: BcRhs,
}

impl BoundaryConstraint {
    pub fn max_trace_deriv(&self) -> usize {
        self.terms.iter().map(|t| t.trace_deriv).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    pub pdes: Vec<PdeConstraint>,
    pub bcs: Vec<BoundaryConstraint>,
}

/// `K_b^B(x, xi(x)) - K_a^A(x, xi(x)) = jump(x)` along `line`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingConstraint {
    pub line: Line,
    pub kernel_a: usize,
    pub kernel_b: usize,
    pub jump: CoeffExpr,
}

/// Two regions separated by `xi = beta x`: A below (`xi <= beta x`), B above.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub beta: f64,
    pub region_a: Region,
    pub region_b: Region,
    pub matching: Vec<MatchingConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Orders {
    Uniform(usize),
    /// One order per kernel group, groups sorted by their smallest kernel.
    PerGroup(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelProblem {
    pub kernels: usize,
    pub domain_length: f64,
    pub center: (f64, f64),
    pub order: Option<Orders>,
    pub pdes: Vec<PdeConstraint>,
    pub bcs: Vec<BoundaryConstraint>,
    pub split: Option<Split>,
}

/// Which piece of the domain a kernel unknown lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionId {
    Whole,
    A,
    B,
}

impl RegionId {
    pub fn name(self) -> &'static str {
        match self {
            RegionId::Whole => "whole",
            RegionId::A => "a",
            RegionId::B => "b",
        }
    }
}

/// A constraint together with its region and its report identifier.
#[derive(Debug, Clone, Copy)]
pub enum ConstraintRef<'a> {
    Pde {
        id: &'a str,
        region: RegionId,
        pde: &'a PdeConstraint,
    },
    Bc {
        id: &'a str,
        region: RegionId,
        bc: &'a BoundaryConstraint,
    },
    Match {
        id: &'a str,
        m: &'a MatchingConstraint,
    },
}

/// Owned identifiers plus references into the problem, in assembly order:
/// top-level PDEs, top-level BCs, region A, region B, matching.
pub struct ConstraintList<'a> {
    ids: Vec<String>,
    items: Vec<(RegionId, Item<'a>)>,
}

#[derive(Clone, Copy)]
enum Item<'a> {
    Pde(&'a PdeConstraint),
    Bc(&'a BoundaryConstraint),
    Match(&'a MatchingConstraint),
}

impl<'a> ConstraintList<'a> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, k: usize) -> ConstraintRef<'_> {
        let id = self.ids[k].as_str();
        match self.items[k] {
            (region, Item::Pde(pde)) => ConstraintRef::Pde { id, region, pde },
            (region, Item::Bc(bc)) => ConstraintRef::Bc { id, region, bc },
            (_, Item::Match(m)) => ConstraintRef::Match { id, m },
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ConstraintRef<'_>> {
        (0..self.len()).map(|k| self.get(k))
    }
}

impl KernelProblem {
    pub fn constraints(&self) -> ConstraintList<'_> {
        let mut ids = Vec::new();
        let mut items = Vec::new();
        for (i, c) in self.pdes.iter().enumerate() {
            ids.push(format!("pde[{i}]"));
            items.push((RegionId::Whole, Item::Pde(c)));
        }
        for (i, c) in self.bcs.iter().enumerate() {
            ids.push(format!("bc[{i}]"));
            items.push((RegionId::Whole, Item::Bc(c)));
        }
        if let Some(s) = &self.split {
            for (tag, region, r) in [("a", RegionId::A, &s.region_a), ("b", RegionId::B, &s.region_b)] {
                for (i, c) in r.pdes.iter().enumerate() {
                    ids.push(format!("split.{tag}.pde[{i}]"));
                    items.push((region, Item::Pde(c)));
                }
                for (i, c) in r.bcs.iter().enumerate() {
                    ids.push(format!("split.{tag}.bc[{i}]"));
                    items.push((region, Item::Bc(c)));
                }
            }
            for (i, m) in s.matching.iter().enumerate() {
                ids.push(format!("match[{i}]"));
                items.push((RegionId::Whole, Item::Match(m)));
            }
        }
        ConstraintList { ids, items }
    }

    /// Kernel slots `(kernel, region)` referenced anywhere, sorted.
    pub fn slots(&self) -> Vec<(usize, RegionId)> {
        let mut set = BTreeSet::new();
        for c in self.constraints().iter() {
            for s in constraint_slots(&c) {
                set.insert(s);
            }
        }
        set.into_iter().collect()
    }

    /// Kernel groups coupled through some constraint, each sorted, the list
    /// sorted by smallest kernel. Kernels referenced nowhere form singleton
    /// groups.
    pub fn kernel_groups(&self) -> Vec<Vec<usize>> {
        let n = self.kernels;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut k: usize) -> usize {
            while parent[k] != k {
                parent[k] = parent[parent[k]];
                k = parent[k];
            }
            k
        }
        for c in self.constraints().iter() {
            let ks: Vec<usize> = constraint_slots(&c)
                .into_iter()
                .map(|(k, _)| k)
                .filter(|&k| k < n)
                .collect();
            for w in ks.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_of_group: Vec<usize> = Vec::new();
        for k in 0..n {
            let r = find(&mut parent, k);
            match root_of_group.iter().position(|&g| g == r) {
                Some(g) => groups[g].push(k),
                None => {
                    root_of_group.push(r);
                    groups.push(vec![k]);
                }
            }
        }
        groups
    }

    /// Truncation order of each kernel group, given an optional override.
    pub fn group_orders(&self, override_order: Option<&Orders>) -> Result<Vec<usize>> {
        let groups = self.kernel_groups();
        let orders = override_order.or(self.order.as_ref()).ok_or_else(|| {
            Error::Param("no truncation order given (problem has no \"order\")".into())
        })?;
        match orders {
            Orders::Uniform(n) => Ok(vec![*n; groups.len()]),
            Orders::PerGroup(list) => {
                if list.len() != groups.len() {
                    return Err(Error::Param(format!(
                        "{} per-group orders given for {} kernel groups",
                        list.len(),
                        groups.len()
                    )));
                }
                Ok(list.clone())
            }
        }
    }
}

pub(crate) fn constraint_slots(c: &ConstraintRef<'_>) -> Vec<(usize, RegionId)> {
    match *c {
        ConstraintRef::Pde { region, pde, .. } => {
            pde.terms.iter().map(|t| (t.kernel, region)).collect()
        }
        ConstraintRef::Bc { region, bc, .. } => {
            bc.terms.iter().map(|t| (t.kernel, region)).collect()
        }
        ConstraintRef::Match { m, .. } => vec![(m.kernel_a, RegionId::A), (m.kernel_b, RegionId::B)],
    }
}

fn check_expr_at(expr: &CoeffExpr, at: f64, what: &str) -> Result<()> {
    expand(expr, at, 0).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("{what}: {msg}")),
        other => other,
    })?;
    if !expr.eval(at).is_finite() {
        return Err(Error::Domain(format!("{what} is not finite at {at}")));
    }
    Ok(())
}

/// Moves the expansion point by `(dx, dxi)`: the new center is
/// `(x0 + dx, xi0 + dxi)`, lines and integral limits are rewritten in the
/// new local coordinates. Fails if a coefficient is singular at the new
/// center.
pub fn localize(p: &KernelProblem, dx: f64, dxi: f64) -> Result<KernelProblem> {
    if !(dx.is_finite() && dxi.is_finite()) {
        return Err(Error::Param("center shift must be finite".into()));
    }
    let mut out = p.clone();
    out.center = (p.center.0 + dx, p.center.1 + dxi);
    let (x0, xi0) = out.center;

    let fix_pde = |c: &mut PdeConstraint| -> Result<()> {
        for t in &c.terms {
            if let Some(a) = &t.a {
                check_expr_at(a, x0, "pde coefficient a(x)")?;
            }
            if let Some(b) = &t.b {
                check_expr_at(b, xi0, "pde coefficient b(xi)")?;
            }
        }
        Ok(())
    };
    let fix_bc = |c: &mut BoundaryConstraint| -> Result<()> {
        c.line = c.line.shifted(dx, dxi);
        for t in &c.terms {
            if let Some(e) = &t.c {
                check_expr_at(e, x0, "boundary coefficient c(x)")?;
            }
        }
        match &mut c.rhs {
            BcRhs::Expr(g) => check_expr_at(g, x0, "boundary data")?,
            BcRhs::Integral(int) => {
                int.lower -= dxi;
                check_expr_at(&int.integrand, xi0, "boundary integrand")?;
            }
        }
        Ok(())
    };
    for c in &mut out.pdes {
        fix_pde(c)?;
    }
    for c in &mut out.bcs {
        fix_bc(c)?;
    }
    if let Some(s) = &mut out.split {
        for r in [&mut s.region_a, &mut s.region_b] {
            for c in &mut r.pdes {
                fix_pde(c)?;
            }
            for c in &mut r.bcs {
                fix_bc(c)?;
            }
        }
        for m in &mut s.matching {
            m.line = m.line.shifted(dx, dxi);
            check_expr_at(&m.jump, x0, "matching jump")?;
        }
    }
    Ok(out)
}

/// Moves the expansion point to an absolute center.
pub fn localize_to(p: &KernelProblem, x0: f64, xi0: f64) -> Result<KernelProblem> {
    localize(p, x0 - p.center.0, xi0 - p.center.1)
}

// ---------------------------------------------------------------------------
// JSON

fn expr_or_null(e: &Option<CoeffExpr>) -> Value {
    e.as_ref().map_or(Value::Null, CoeffExpr::to_json)
}

fn line_json(l: &Line) -> Value {
    json!({"alpha": l.alpha, "gamma": l.gamma})
}

fn pdes_json(pdes: &[PdeConstraint]) -> Value {
    Value::Array(
        pdes.iter()
            .map(|c| {
                json!({"terms": c.terms.iter().map(|t| json!({
                    "kernel": t.kernel,
                    "a": expr_or_null(&t.a),
                    "b": expr_or_null(&t.b),
                    "deriv": [t.deriv.0, t.deriv.1],
                    "weight": t.weight,
                })).collect::<Vec<_>>()})
            })
            .collect(),
    )
}

fn bcs_json(bcs: &[BoundaryConstraint]) -> Value {
    Value::Array(
        bcs.iter()
            .map(|c| {
                let rhs = match &c.rhs {
                    BcRhs::Expr(g) => g.to_json(),
                    BcRhs::Integral(i) => json!({"integral": {
                        "integrand": i.integrand.to_json(),
                        "lower": i.lower,
                        "scale": i.scale,
                    }}),
                };
                json!({
                    "line": line_json(&c.line),
                    "terms": c.terms.iter().map(|t| json!({
                        "kernel": t.kernel,
                        "c": expr_or_null(&t.c),
                        "trace_deriv": t.trace_deriv,
                    })).collect::<Vec<_>>(),
                    "rhs": rhs,
                })
            })
            .collect(),
    )
}

pub fn problem_to_json(p: &KernelProblem) -> Value {
    let mut m = Map::new();
    m.insert("kernels".into(), json!(p.kernels));
    m.insert("domain_length".into(), json!(p.domain_length));
    m.insert("center".into(), json!([p.center.0, p.center.1]));
    match &p.order {
        Some(Orders::Uniform(n)) => {
            m.insert("order".into(), json!(n));
        }
        Some(Orders::PerGroup(list)) => {
            m.insert("order".into(), json!(list));
        }
        None => {}
    }
    m.insert("pdes".into(), pdes_json(&p.pdes));
    m.insert("bcs".into(), bcs_json(&p.bcs));
    if let Some(s) = &p.split {
        let region = |r: &Region| json!({"pdes": pdes_json(&r.pdes), "bcs": bcs_json(&r.bcs)});
        m.insert(
            "split".into(),
            json!({
                "beta": s.beta,
                "region_a": region(&s.region_a),
                "region_b": region(&s.region_b),
                "matching": s.matching.iter().map(|mc| json!({
                    "line": line_json(&mc.line),
                    "kernel_a": mc.kernel_a,
                    "kernel_b": mc.kernel_b,
                    "jump": mc.jump.to_json(),
                })).collect::<Vec<_>>(),
            }),
        );
    }
    Value::Object(m)
}

pub fn serialize_problem(p: &KernelProblem) -> String {
    serde_json::to_string_pretty(&problem_to_json(p)).expect("problem JSON is always serializable")
}

pub fn parse_problem(text: &str) -> Result<KernelProblem> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::schema("$", format!("invalid JSON: {e}")))?;
    problem_from_json(&v, "$")
}

fn field<'v>(obj: &'v Map<String, Value>, path: &str, name: &str) -> Result<&'v Value> {
    obj.get(name)
        .ok_or_else(|| Error::schema(format!("{path}.{name}"), "missing field"))
}

fn as_object<'v>(v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))
}

fn as_array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::schema(path, "expected an array"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::schema(path, "expected a number"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::schema(path, "expected a nonnegative integer"))
}

fn opt_expr(obj: &Map<String, Value>, path: &str, name: &str) -> Result<Option<CoeffExpr>> {
    match obj.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => CoeffExpr::from_json(v, &format!("{path}.{name}")).map(Some),
    }
}

fn line_from_json(v: &Value, path: &str) -> Result<Line> {
    let o = as_object(v, path)?;
    Ok(Line {
        alpha: as_f64(field(o, path, "alpha")?, &format!("{path}.alpha"))?,
        gamma: as_f64(field(o, path, "gamma")?, &format!("{path}.gamma"))?,
    })
}

fn pdes_from_json(v: &Value, path: &str) -> Result<Vec<PdeConstraint>> {
    let mut out = Vec::new();
    for (i, c) in as_array(v, path)?.iter().enumerate() {
        let cpath = format!("{path}[{i}]");
        let o = as_object(c, &cpath)?;
        let tpath = format!("{cpath}.terms");
        let terms_v = as_array(field(o, &cpath, "terms")?, &tpath)?;
        if terms_v.is_empty() {
            return Err(Error::schema(tpath, "a PDE needs at least one term"));
        }
        let mut terms = Vec::new();
        for (k, t) in terms_v.iter().enumerate() {
            let p = format!("{tpath}[{k}]");
            let o = as_object(t, &p)?;
            let d = as_array(field(o, &p, "deriv")?, &format!("{p}.deriv"))?;
            if d.len() != 2 {
                return Err(Error::schema(format!("{p}.deriv"), "expected [p, q]"));
            }
            terms.push(PdeTerm {
                kernel: as_usize(field(o, &p, "kernel")?, &format!("{p}.kernel"))?,
                a: opt_expr(o, &p, "a")?,
                b: opt_expr(o, &p, "b")?,
                deriv: (
                    as_usize(&d[0], &format!("{p}.deriv[0]"))?,
                    as_usize(&d[1], &format!("{p}.deriv[1]"))?,
                ),
                weight: match o.get("weight") {
                    None => 1.0,
                    Some(w) => as_f64(w, &format!("{p}.weight"))?,
                },
            });
        }
        out.push(PdeConstraint { terms });
    }
    Ok(out)
}

fn bcs_from_json(v: &Value, path: &str) -> Result<Vec<BoundaryConstraint>> {
    let mut out = Vec::new();
    for (i, c) in as_array(v, path)?.iter().enumerate() {
        let cpath = format!("{path}[{i}]");
        let o = as_object(c, &cpath)?;
        let line = line_from_json(field(o, &cpath, "line")?, &format!("{cpath}.line"))?;
        let tpath = format!("{cpath}.terms");
        let terms_v = as_array(field(o, &cpath, "terms")?, &tpath)?;
        if terms_v.is_empty() {
            return Err(Error::schema(tpath, "a boundary constraint needs at least one term"));
        }
        let mut terms = Vec::new();
        for (k, t) in terms_v.iter().enumerate() {
            let p = format!("{tpath}[{k}]");
            let o = as_object(t, &p)?;
            let trace_deriv = match o.get("trace_deriv") {
                None => 0,
                Some(d) => as_usize(d, &format!("{p}.trace_deriv"))?,
            };
            if trace_deriv > 1 {
                return Err(Error::schema(format!("{p}.trace_deriv"), "must be 0 or 1"));
            }
            terms.push(BcTerm {
                kernel: as_usize(field(o, &p, "kernel")?, &format!("{p}.kernel"))?,
                c: opt_expr(o, &p, "c")?,
                trace_deriv,
            });
        }
        let rpath = format!("{cpath}.rhs");
        let rhs_v = field(o, &cpath, "rhs")?;
        let rhs = match rhs_v.as_object().and_then(|r| r.get("integral")) {
            Some(int) => {
                let ip = format!("{rpath}.integral");
                let io = as_object(int, &ip)?;
                BcRhs::Integral(IntegralRhs {
                    integrand: CoeffExpr::from_json(
                        field(io, &ip, "integrand")?,
                        &format!("{ip}.integrand"),
                    )?,
                    lower: as_f64(field(io, &ip, "lower")?, &format!("{ip}.lower"))?,
                    scale: as_f64(field(io, &ip, "scale")?, &format!("{ip}.scale"))?,
                })
            }
            None => BcRhs::Expr(CoeffExpr::from_json(rhs_v, &rpath)?),
        };
        out.push(BoundaryConstraint { line, terms, rhs });
    }
    Ok(out)
}

fn region_from_json(v: &Value, path: &str) -> Result<Region> {
    let o = as_object(v, path)?;
    Ok(Region {
        pdes: match o.get("pdes") {
            Some(p) => pdes_from_json(p, &format!("{path}.pdes"))?,
            None => Vec::new(),
        },
        bcs: match o.get("bcs") {
            Some(b) => bcs_from_json(b, &format!("{path}.bcs"))?,
            None => Vec::new(),
        },
    })
}

pub fn problem_from_json(v: &Value, path: &str) -> Result<KernelProblem> {
    let o = as_object(v, path)?;
    let kernels = as_usize(field(o, path, "kernels")?, &format!("{path}.kernels"))?;
    let lpath = format!("{path}.domain_length");
    let domain_length = as_f64(field(o, path, "domain_length")?, &lpath)?;
    if !(domain_length > 0.0 && domain_length.is_finite()) {
        return Err(Error::schema(lpath, "must be a positive finite number"));
    }
    let center = match o.get("center") {
        None => (0.0, 0.0),
        Some(c) => {
            let cp = format!("{path}.center");
            let a = as_array(c, &cp)?;
            if a.len() != 2 {
                return Err(Error::schema(cp, "expected [x0, xi0]"));
            }
            (
                as_f64(&a[0], &format!("{cp}[0]"))?,
                as_f64(&a[1], &format!("{cp}[1]"))?,
            )
        }
    };
    let order = match o.get("order") {
        None | Some(Value::Null) => None,
        Some(Value::Array(list)) => Some(Orders::PerGroup(
            list.iter()
                .enumerate()
                .map(|(k, n)| as_usize(n, &format!("{path}.order[{k}]")))
                .collect::<Result<_>>()?,
        )),
        Some(n) => Some(Orders::Uniform(as_usize(n, &format!("{path}.order"))?)),
    };
    let pdes = pdes_from_json(field(o, path, "pdes")?, &format!("{path}.pdes"))?;
    let bcs = bcs_from_json(field(o, path, "bcs")?, &format!("{path}.bcs"))?;
    let split = match o.get("split") {
        None | Some(Value::Null) => None,
        Some(s) => {
            let sp = format!("{path}.split");
            let so = as_object(s, &sp)?;
            let beta = as_f64(field(so, &sp, "beta")?, &format!("{sp}.beta"))?;
            let mut matching = Vec::new();
            if let Some(mv) = so.get("matching") {
                let mp = format!("{sp}.matching");
                for (i, m) in as_array(mv, &mp)?.iter().enumerate() {
                    let p = format!("{mp}[{i}]");
                    let mo = as_object(m, &p)?;
                    matching.push(MatchingConstraint {
                        line: line_from_json(field(mo, &p, "line")?, &format!("{p}.line"))?,
                        kernel_a: as_usize(field(mo, &p, "kernel_a")?, &format!("{p}.kernel_a"))?,
                        kernel_b: as_usize(field(mo, &p, "kernel_b")?, &format!("{p}.kernel_b"))?,
                        jump: match mo.get("jump") {
                            None | Some(Value::Null) => CoeffExpr::zero(),
                            Some(j) => CoeffExpr::from_json(j, &format!("{p}.jump"))?,
                        },
                    });
                }
            }
            Some(Split {
                beta,
                region_a: region_from_json(field(so, &sp, "region_a")?, &format!("{sp}.region_a"))?,
                region_b: region_from_json(field(so, &sp, "region_b")?, &format!("{sp}.region_b"))?,
                matching,
            })
        }
    };
    Ok(KernelProblem {
        kernels,
        domain_length,
        center,
        order,
        pdes,
        bcs,
        split,
    })
}

// ---------------------------------------------------------------------------
// Validation

/// Counting summary of one kernel group.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GroupCount {
    pub kernels: Vec<usize>,
    pub order: usize,
    pub unknowns: usize,
    pub pde_rows: usize,
    pub boundary_rows: usize,
    pub duplicates_removed: usize,
    pub corner_rows_removed: usize,
    pub rows_after: usize,
}

impl GroupCount {
    pub fn is_square(&self) -> bool {
        self.rows_after == self.unknowns
    }

    /// E.g. `"square after 1 duplicate removal"`.
    pub fn summary(&self) -> String {
        let removed = self.duplicates_removed + self.corner_rows_removed;
        let shape = match self.rows_after.cmp(&self.unknowns) {
            std::cmp::Ordering::Equal => "square".to_string(),
            std::cmp::Ordering::Greater => {
                format!("overdetermined by {}", self.rows_after - self.unknowns)
            }
            std::cmp::Ordering::Less => {
                format!("underdetermined by {}", self.unknowns - self.rows_after)
            }
        };
        let mut parts = Vec::new();
        if self.duplicates_removed > 0 {
            parts.push(format!(
                "{} duplicate removal{}",
                self.duplicates_removed,
                if self.duplicates_removed == 1 { "" } else { "s" }
            ));
        }
        if self.corner_rows_removed > 0 {
            parts.push(format!(
                "{} corner row removal{}",
                self.corner_rows_removed,
                if self.corner_rows_removed == 1 { "" } else { "s" }
            ));
        }
        if removed == 0 {
            shape
        } else {
            format!("{shape} after {}", parts.join(" and "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub groups: Vec<GroupCount>,
}

impl ValidationReport {
    /// No structural errors and every group square after row removal.
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty() && self.groups.iter().all(GroupCount::is_square)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for g in &self.groups {
            s.push_str(&format!(
                "group {:?} order {}: {} unknowns, {} pde rows + {} boundary rows -> {}\n",
                g.kernels,
                g.order,
                g.unknowns,
                g.pde_rows,
                g.boundary_rows,
                g.summary()
            ));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        for e in &self.errors {
            s.push_str(&format!("error: {e}\n"));
        }
        s
    }
}

/// Order used for counting when neither the problem nor the caller gives one.
pub const DEFAULT_COUNT_ORDER: usize = 10;

/// Structural checks plus equation counting per kernel group. Never fails;
/// problems are reported.
pub fn validate_problem(p: &KernelProblem, order: Option<&Orders>) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if !(p.domain_length > 0.0) {
        rep.errors.push("domain_length must be positive".into());
    }
    let mut referenced = vec![false; p.kernels];
    let mut in_pde = vec![false; p.kernels];
    let constraints = p.constraints();
    for c in constraints.iter() {
        match c {
            ConstraintRef::Pde { id, pde, .. } => {
                if pde.terms.is_empty() {
                    rep.errors.push(format!("{id}: no terms"));
                }
                for (k, t) in pde.terms.iter().enumerate() {
                    if t.deriv.0 + t.deriv.1 > 2 {
                        rep.errors.push(format!(
                            "{id}.terms[{k}]: derivative order ({}, {}) exceeds total order 2",
                            t.deriv.0, t.deriv.1
                        ));
                    }
                    if t.kernel >= p.kernels {
                        rep.errors.push(format!("{id}.terms[{k}]: kernel {} out of range", t.kernel));
                    } else {
                        referenced[t.kernel] = true;
                        in_pde[t.kernel] = true;
                    }
                }
            }
            ConstraintRef::Bc { id, bc, .. } => {
                if bc.terms.is_empty() {
                    rep.errors.push(format!("{id}: no terms"));
                }
                for (k, t) in bc.terms.iter().enumerate() {
                    if t.trace_deriv > 1 {
                        rep.errors.push(format!("{id}.terms[{k}]: trace_deriv must be 0 or 1"));
                    }
                    if t.kernel >= p.kernels {
                        rep.errors.push(format!("{id}.terms[{k}]: kernel {} out of range", t.kernel));
                    } else {
                        referenced[t.kernel] = true;
                    }
                }
            }
            ConstraintRef::Match { id, m } => {
                for k in [m.kernel_a, m.kernel_b] {
                    if k >= p.kernels {
                        rep.errors.push(format!("{id}: kernel {k} out of range"));
                    } else {
                        referenced[k] = true;
                    }
                }
            }
        }
    }
    if let Some(s) = &p.split {
        if !(s.beta > 0.0 && s.beta < 1.0) {
            rep.errors.push(format!("split.beta = {} is not in (0, 1)", s.beta));
        }
        let split_kernels: BTreeSet<usize> = p
            .slots()
            .into_iter()
            .filter(|&(_, r)| r != RegionId::Whole)
            .map(|(k, _)| k)
            .collect();
        let whole_kernels: BTreeSet<usize> = p
            .slots()
            .into_iter()
            .filter(|&(_, r)| r == RegionId::Whole)
            .map(|(k, _)| k)
            .collect();
        for k in split_kernels.intersection(&whole_kernels) {
            rep.errors.push(format!(
                "kernel {k} is constrained both on the whole domain and inside the split"
            ));
        }
    }
    for k in 0..p.kernels {
        if !referenced[k] {
            rep.warnings.push(format!("kernel {k} is not referenced by any constraint"));
        } else if !in_pde[k] {
            rep.warnings.push(format!("kernel {k} appears in no PDE"));
        }
    }
    if constraints.iter().all(|c| !matches!(c, ConstraintRef::Pde { .. })) {
        rep.warnings.push("problem has no PDE constraints".into());
    }
    if !rep.errors.is_empty() {
        return rep;
    }

    let orders = match p.group_orders(order) {
        Ok(o) => o,
        Err(_) => {
            let n = p.kernel_groups().len();
            vec![DEFAULT_COUNT_ORDER; n]
        }
    };
    for (g, kernels) in p.kernel_groups().iter().enumerate() {
        match crate::assembler::count_group(p, kernels, orders[g]) {
            Ok(c) => rep.groups.push(c),
            Err(e) => rep.errors.push(format!("group {kernels:?}: {e}")),
        }
    }
    for g in &rep.groups {
        if !g.is_square() {
            rep.errors.push(format!(
                "group {:?} at order {}: {} rows for {} unknowns ({})",
                g.kernels,
                g.order,
                g.rows_after,
                g.unknowns,
                g.summary()
            ));
        }
    }
    rep
}
