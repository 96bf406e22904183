//! Builders for the five reference kernel problems.
//!
//! | name       | kernels | equations                                                  |
//! |------------|---------|------------------------------------------------------------|
//! | `example1` | `K`     | `K_xx - K_xixi = ((lambda(xi) + c)/eps) K`                 |
//! | `example2` | `K`     | `eps(x) K_xx - eps(xi) K_xixi = (lambda(xi) + c) K`        |
//! | `example3` | `K^vv`, `K^vu` | coupled first-order transport with speeds `mu`, `eps` |
//! | `example4` | `L11, L12, L21, L22` | constant-speed transport, split for `(L11, L12)` |
//! | `example5` | `K`     | `example1` expanded about a shifted center                 |
//!
//! Every builder also has a parameter-map form, [`build_named`], used by the
//! CLI and by sweeps. Parameters are numbers or expression objects.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::expr::CoeffExpr;
use crate::problem::{
    localize_to, BcRhs, BcTerm, BoundaryConstraint, IntegralRhs, KernelProblem, Line,
    MatchingConstraint, Orders, PdeConstraint, PdeTerm, Region, Split,
};

pub const NAMES: [&str; 5] = ["example1", "example2", "example3", "example4", "example5"];

fn x() -> CoeffExpr {
    CoeffExpr::var()
}

fn c(v: f64) -> CoeffExpr {
    CoeffExpr::constant(v)
}

/// `3 + x^2 sin(3x)`.
pub fn lambda_convergent() -> CoeffExpr {
    c(3.0) + x().powi(2) * (c(3.0) * x()).sin()
}

/// `sqrt(0.5 + x^2)`, singular at `±i sqrt(0.5)`.
pub fn lambda_sqrt() -> CoeffExpr {
    (c(0.5) + x().powi(2)).sqrt()
}

pub fn example1(lam: CoeffExpr, eps: f64, cc: f64, l: f64) -> KernelProblem {
    let reaction = lam + cc;
    KernelProblem {
        kernels: 1,
        domain_length: l,
        center: (0.0, 0.0),
        order: Some(Orders::Uniform(25)),
        pdes: vec![PdeConstraint {
            terms: vec![
                PdeTerm::new(0, (2, 0), 1.0),
                PdeTerm::new(0, (0, 2), -1.0),
                PdeTerm::new(0, (0, 0), -1.0 / eps).with_b(reaction.clone()),
            ],
        }],
        bcs: vec![
            BoundaryConstraint {
                line: Line::new(1.0, 0.0),
                terms: vec![BcTerm::new(0, 0)],
                rhs: BcRhs::Integral(IntegralRhs {
                    integrand: reaction,
                    lower: 0.0,
                    scale: -1.0 / (2.0 * eps),
                }),
            },
            BoundaryConstraint {
                line: Line::new(0.0, 0.0),
                terms: vec![BcTerm::new(0, 0)],
                rhs: BcRhs::Expr(CoeffExpr::zero()),
            },
        ],
        split: None,
    }
}

/// `lambda = 2 + x^2 cos(6x^2)`.
pub fn lambda_example2() -> CoeffExpr {
    c(2.0) + x().powi(2) * (c(6.0) * x().powi(2)).cos()
}

/// `eps = 3 + 2x^3`.
pub fn eps_example2() -> CoeffExpr {
    c(3.0) + c(2.0) * x().powi(3)
}

pub fn example2(lam: CoeffExpr, eps: CoeffExpr, cc: f64, l: f64) -> Result<KernelProblem> {
    let e0 = eps.eval(0.0);
    if !(e0 > 0.0) {
        return Err(Error::Domain(format!("eps(0) = {e0} must be positive")));
    }
    let deps = eps.derivative();
    Ok(KernelProblem {
        kernels: 1,
        domain_length: l,
        center: (0.0, 0.0),
        order: Some(Orders::Uniform(40)),
        pdes: vec![PdeConstraint {
            terms: vec![
                PdeTerm::new(0, (2, 0), 1.0).with_a(eps.clone()),
                PdeTerm::new(0, (0, 2), -1.0).with_b(eps.clone()),
                PdeTerm::new(0, (0, 0), -1.0).with_b(lam.clone() + cc),
            ],
        }],
        bcs: vec![
            BoundaryConstraint {
                line: Line::new(1.0, 0.0),
                terms: vec![
                    BcTerm::new(0, 1).with_c(c(2.0) * eps),
                    BcTerm::new(0, 0).with_c(deps),
                ],
                rhs: BcRhs::Expr(-(lam + cc)),
            },
            BoundaryConstraint {
                line: Line::new(0.0, 0.0),
                terms: vec![BcTerm::new(0, 0)],
                rhs: BcRhs::Expr(CoeffExpr::zero()),
            },
        ],
        split: None,
    })
}

/// Coefficients of the coupled transport example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example3Params {
    pub eps: CoeffExpr,
    pub mu: CoeffExpr,
    pub c1: CoeffExpr,
    pub c2: CoeffExpr,
    pub c3: CoeffExpr,
    pub c4: CoeffExpr,
    pub q: f64,
    pub l: f64,
}

impl Default for Example3Params {
    fn default() -> Self {
        Example3Params {
            mu: c(1.4) + x().powi(3),
            eps: c(1.3) + x().powi(2),
            c1: c(3.0) * (c(3.0) * x()).exp(),
            c2: (c(3.0) * x()).sin(),
            c3: c(1.0) + c(2.0) * (c(2.0) * x()).cos(),
            c4: c(1.0) / (c(3.0) + c(1.5) * x().powi(3)),
            q: 1.0,
            l: 1.0,
        }
    }
}

/// Kernel 0 is `K^vv`, kernel 1 is `K^vu`.
pub fn example3(p: &Example3Params) -> Result<KernelProblem> {
    let mu0 = p.mu.eval(0.0);
    if mu0 == 0.0 || !mu0.is_finite() {
        return Err(Error::Domain(format!("mu(0) = {mu0} must be nonzero")));
    }
    let (vv, vu) = (0, 1);
    let coupling = p.q * p.eps.eval(0.0) / mu0;
    let pde_vv = PdeConstraint {
        terms: vec![
            PdeTerm::new(vv, (1, 0), 1.0).with_a(p.mu.clone()),
            PdeTerm::new(vv, (0, 1), 1.0).with_b(p.mu.clone()),
            PdeTerm::new(vv, (0, 0), 1.0).with_b(p.mu.derivative()),
            PdeTerm::new(vu, (0, 0), -1.0).with_b(p.c2.clone()),
            PdeTerm::new(vu, (0, 0), -1.0).with_a(p.c4.clone()),
            PdeTerm::new(vu, (0, 0), 1.0).with_b(p.c4.clone()),
        ],
    };
    let pde_vu = PdeConstraint {
        terms: vec![
            PdeTerm::new(vu, (1, 0), 1.0).with_a(p.mu.clone()),
            PdeTerm::new(vu, (0, 1), -1.0).with_b(p.eps.clone()),
            PdeTerm::new(vu, (0, 0), -1.0).with_b(p.eps.derivative()),
            PdeTerm::new(vv, (0, 0), -1.0).with_b(p.c3.clone()),
            PdeTerm::new(vv, (0, 0), -1.0).with_a(p.c4.clone()),
            PdeTerm::new(vv, (0, 0), 1.0).with_b(p.c1.clone()),
        ],
    };
    Ok(KernelProblem {
        kernels: 2,
        domain_length: p.l,
        center: (0.0, 0.0),
        order: Some(Orders::Uniform(40)),
        pdes: vec![pde_vv, pde_vu],
        bcs: vec![
            BoundaryConstraint {
                line: Line::new(0.0, 0.0),
                terms: vec![BcTerm::new(vv, 0), BcTerm::new(vu, 0).with_c(c(-coupling))],
                rhs: BcRhs::Expr(CoeffExpr::zero()),
            },
            BoundaryConstraint {
                line: Line::new(1.0, 0.0),
                terms: vec![BcTerm::new(vu, 0).with_c(p.eps.clone() + p.mu.clone())],
                rhs: BcRhs::Expr(-p.c3.clone()),
            },
        ],
        split: None,
    })
}

/// Kernels 0..=3 are `L11, L12, L21, L22`. `(L11, L12)` live on two regions
/// split by the characteristic `xi = (mu2/mu1) x`.
pub fn example4(mu1: f64, mu2: f64, s12: CoeffExpr, s21: CoeffExpr, l: f64) -> Result<KernelProblem> {
    if !(mu1 > mu2 && mu2 > 0.0) {
        return Err(Error::Param(format!(
            "transport speeds need mu1 > mu2 > 0, got mu1 = {mu1}, mu2 = {mu2}"
        )));
    }
    let (l11, l12, l21, l22) = (0, 1, 2, 3);
    let zero_on = |k: usize, line: Line| BoundaryConstraint {
        line,
        terms: vec![BcTerm::new(k, 0)],
        rhs: BcRhs::Expr(CoeffExpr::zero()),
    };
    let bottom = Line::new(0.0, 0.0);
    let diag = Line::new(1.0, 0.0);
    let group1_pdes = vec![
        PdeConstraint {
            terms: vec![
                PdeTerm::new(l11, (1, 0), mu1),
                PdeTerm::new(l11, (0, 1), mu1),
                PdeTerm::new(l12, (0, 0), -1.0).with_b(s21.clone()),
            ],
        },
        PdeConstraint {
            terms: vec![
                PdeTerm::new(l12, (1, 0), mu1),
                PdeTerm::new(l12, (0, 1), mu2),
                PdeTerm::new(l11, (0, 0), -1.0).with_b(s12.clone()),
            ],
        },
    ];
    let beta = mu2 / mu1;
    Ok(KernelProblem {
        kernels: 4,
        domain_length: l,
        center: (0.0, 0.0),
        order: Some(Orders::PerGroup(vec![8, 40])),
        pdes: vec![
            PdeConstraint {
                terms: vec![
                    PdeTerm::new(l21, (1, 0), mu2),
                    PdeTerm::new(l21, (0, 1), mu1),
                    PdeTerm::new(l22, (0, 0), -1.0).with_b(s21.clone()),
                ],
            },
            PdeConstraint {
                terms: vec![
                    PdeTerm::new(l22, (1, 0), mu2),
                    PdeTerm::new(l22, (0, 1), mu2),
                    PdeTerm::new(l21, (0, 0), -1.0).with_b(s12.clone()),
                ],
            },
        ],
        bcs: vec![
            BoundaryConstraint {
                line: diag,
                terms: vec![BcTerm::new(l21, 0)],
                rhs: BcRhs::Expr(CoeffExpr::Div(Box::new(s21), Box::new(c(mu1 - mu2)))),
            },
            zero_on(l22, bottom),
        ],
        split: Some(Split {
            beta,
            region_a: Region {
                pdes: group1_pdes.clone(),
                bcs: vec![zero_on(l11, bottom), zero_on(l12, bottom)],
            },
            region_b: Region {
                pdes: group1_pdes,
                bcs: vec![BoundaryConstraint {
                    line: diag,
                    terms: vec![BcTerm::new(l12, 0)],
                    rhs: BcRhs::Expr(CoeffExpr::Div(Box::new(s12), Box::new(c(mu2 - mu1)))),
                }],
            },
            matching: vec![MatchingConstraint {
                line: Line::new(beta, 0.0),
                kernel_a: l11,
                kernel_b: l11,
                jump: CoeffExpr::zero(),
            }],
        }),
    })
}

/// [`example1`] expanded about `(x0, xi0)`.
pub fn example5(lam: CoeffExpr, eps: f64, cc: f64, l: f64, x0: f64, xi0: f64) -> Result<KernelProblem> {
    localize_to(&example1(lam, eps, cc, l), x0, xi0)
}

fn get_f64(params: &Map<String, Value>, name: &str, default: f64) -> Result<f64> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::schema(format!("$.params.{name}"), "expected a number")),
    }
}

fn get_expr(params: &Map<String, Value>, name: &str, default: CoeffExpr) -> Result<CoeffExpr> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => match v.as_f64() {
            Some(n) => Ok(CoeffExpr::constant(n)),
            None => CoeffExpr::from_json(v, &format!("$.params.{name}")),
        },
    }
}

fn check_known(params: &Map<String, Value>, known: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !known.contains(&k.as_str()) {
            return Err(Error::schema(
                format!("$.params.{k}"),
                format!("unknown parameter; expected one of {known:?}"),
            ));
        }
    }
    Ok(())
}

/// Builds a reference problem from a parameter map. Missing parameters take
/// the reference values: example 1 `lambda = 3 + x^2 sin(3x)`, `eps = 1`,
/// `c = 3`, `L = 1`; example 5 the same with `lambda = sqrt(0.5 + x^2)` and
/// center `(0.5, 0.7)`; examples 2 to 4 their reference instances.
pub fn build_named(name: &str, params: &Map<String, Value>) -> Result<KernelProblem> {
    match name {
        "example1" => {
            check_known(params, &["lambda", "eps", "c", "L"])?;
            Ok(example1(
                get_expr(params, "lambda", lambda_convergent())?,
                get_f64(params, "eps", 1.0)?,
                get_f64(params, "c", 3.0)?,
                get_f64(params, "L", 1.0)?,
            ))
        }
        "example2" => {
            check_known(params, &["lambda", "eps", "c", "L"])?;
            example2(
                get_expr(params, "lambda", lambda_example2())?,
                get_expr(params, "eps", eps_example2())?,
                get_f64(params, "c", 3.0)?,
                get_f64(params, "L", 1.0)?,
            )
        }
        "example3" => {
            check_known(params, &["eps", "mu", "c1", "c2", "c3", "c4", "q", "L"])?;
            let d = Example3Params::default();
            example3(&Example3Params {
                eps: get_expr(params, "eps", d.eps)?,
                mu: get_expr(params, "mu", d.mu)?,
                c1: get_expr(params, "c1", d.c1)?,
                c2: get_expr(params, "c2", d.c2)?,
                c3: get_expr(params, "c3", d.c3)?,
                c4: get_expr(params, "c4", d.c4)?,
                q: get_f64(params, "q", d.q)?,
                l: get_f64(params, "L", d.l)?,
            })
        }
        "example4" => {
            check_known(params, &["mu1", "mu2", "sigma12", "sigma21", "L"])?;
            example4(
                get_f64(params, "mu1", 1.0)?,
                get_f64(params, "mu2", 0.2)?,
                get_expr(params, "sigma12", c(5.0))?,
                get_expr(params, "sigma21", c(2.0))?,
                get_f64(params, "L", 1.0)?,
            )
        }
        "example5" => {
            check_known(params, &["lambda", "eps", "c", "L", "x0", "xi0"])?;
            example5(
                get_expr(params, "lambda", lambda_sqrt())?,
                get_f64(params, "eps", 1.0)?,
                get_f64(params, "c", 3.0)?,
                get_f64(params, "L", 1.0)?,
                get_f64(params, "x0", 0.5)?,
                get_f64(params, "xi0", 0.7)?,
            )
        }
        _ => Err(Error::Param(format!(
            "unknown example \"{name}\"; expected one of {NAMES:?}"
        ))),
    }
}

/// Reference instance of a named example.
pub fn reference(name: &str) -> Result<KernelProblem> {
    build_named(name, &Map::new())
}

/// Canonical JSON document of a reference instance.
pub fn canonical_json(name: &str) -> Result<String> {
    Ok(crate::problem::serialize_problem(&reference(name)?))
}
