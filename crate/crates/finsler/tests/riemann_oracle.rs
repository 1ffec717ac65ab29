//! Independent oracle: Christoffel symbols and the Riemann tensor from the
//! metric components g_ij(x), differentiated symbolically and assembled by
//! the textbook formulas. Nothing here goes through E, the jets or the spray.

#![allow(clippy::needless_range_loop)] // index loops mirror the tensor formulas

use exprlang::{differentiate, evaluate, parse, Expr, Var};
use finsler::curvature::Pack;
use finsler::spraycore::{Engine, EngineOptions};
use finsler::twodim::gauss_curvature;
use finsler::{gallery, sample_points, GeometrySpec, TangentPoint};

const N: usize = 2;

struct Metric {
    g: Vec<Vec<Expr>>,
    dg: Vec<Vec<Vec<Expr>>>,
    ddg: Vec<Vec<Vec<Vec<Expr>>>>,
}

impl Metric {
    fn new(components: [[&str; N]; N]) -> Metric {
        let g: Vec<Vec<Expr>> = components.iter().map(|row| row.iter().map(|s| parse(s, N).unwrap()).collect()).collect();
        let d = |e: &Expr, k: usize| differentiate(e, Var::x(k));
        let dg: Vec<Vec<Vec<Expr>>> = g.iter().map(|row| row.iter().map(|e| (0..N).map(|k| d(e, k)).collect()).collect()).collect();
        let ddg = dg.iter().map(|row| row.iter().map(|es| es.iter().map(|e| (0..N).map(|l| d(e, l)).collect()).collect()).collect()).collect();
        Metric { g, dg, ddg }
    }
}

/// Γ^i_jk, ∂_l Γ^i_jk and Riem^i_{ljk} (with R(∂_j, ∂_k)∂_l = Riem^i_{ljk} ∂_i).
struct Christoffel {
    g: [[f64; N]; N],
    gamma: [[[f64; N]; N]; N],
    riem: [[[[f64; N]; N]; N]; N],
}

fn christoffel(m: &Metric, x: &[f64]) -> Christoffel {
    let ev = |e: &Expr| evaluate(e, x, &[0.0; N]).unwrap();
    let mut g = [[0.0; N]; N];
    let mut dg = [[[0.0; N]; N]; N];
    let mut ddg = [[[[0.0; N]; N]; N]; N];
    for i in 0..N {
        for j in 0..N {
            g[i][j] = ev(&m.g[i][j]);
            for k in 0..N {
                dg[i][j][k] = ev(&m.dg[i][j][k]);
                for l in 0..N {
                    ddg[i][j][k][l] = ev(&m.ddg[i][j][k][l]);
                }
            }
        }
    }
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let gi = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    // ∂_l g^{im} = −g^{ia} ∂_l g_ab g^{bm}
    let mut dgi = [[[0.0; N]; N]; N];
    for i in 0..N {
        for mm in 0..N {
            for l in 0..N {
                for a in 0..N {
                    for b in 0..N {
                        dgi[i][mm][l] -= gi[i][a] * dg[a][b][l] * gi[b][mm];
                    }
                }
            }
        }
    }
    let first = |mm: usize, j: usize, k: usize| dg[mm][k][j] + dg[mm][j][k] - dg[j][k][mm];
    let first_d = |mm: usize, j: usize, k: usize, l: usize| ddg[mm][k][j][l] + ddg[mm][j][k][l] - ddg[j][k][mm][l];
    let mut gamma = [[[0.0; N]; N]; N];
    let mut dgamma = [[[[0.0; N]; N]; N]; N];
    for i in 0..N {
        for j in 0..N {
            for k in 0..N {
                for mm in 0..N {
                    gamma[i][j][k] += 0.5 * gi[i][mm] * first(mm, j, k);
                    for l in 0..N {
                        dgamma[i][j][k][l] += 0.5 * (dgi[i][mm][l] * first(mm, j, k) + gi[i][mm] * first_d(mm, j, k, l));
                    }
                }
            }
        }
    }
    let mut riem = [[[[0.0; N]; N]; N]; N];
    for i in 0..N {
        for l in 0..N {
            for j in 0..N {
                for k in 0..N {
                    let mut r = dgamma[i][k][l][j] - dgamma[i][j][l][k];
                    for mm in 0..N {
                        r += gamma[i][j][mm] * gamma[mm][k][l] - gamma[i][k][mm] * gamma[mm][j][l];
                    }
                    riem[i][l][j][k] = r;
                }
            }
        }
    }
    Christoffel { g, gamma, riem }
}

fn sectional(c: &Christoffel) -> f64 {
    let det = c.g[0][0] * c.g[1][1] - c.g[0][1] * c.g[1][0];
    (0..N).map(|i| c.g[0][i] * c.riem[i][1][0][1]).sum::<f64>() / det
}

fn half_plane() -> Metric {
    Metric::new([["1/x2^2", "0"], ["0", "1/x2^2"]])
}

fn sphere() -> Metric {
    Metric::new([["4/(1 + x1^2 + x2^2)^2", "0"], ["0", "4/(1 + x1^2 + x2^2)^2"]])
}

fn points(spec: &GeometrySpec, count: usize) -> Vec<TangentPoint> {
    sample_points(spec, count, 11).unwrap()
}

#[test]
fn oracle_sectional_curvature_is_the_known_constant() {
    for (m, want) in [(half_plane(), -1.0), (sphere(), 1.0)] {
        for x in [[0.3, 0.7], [-1.1, 1.9], [0.0, 0.2]] {
            let k = sectional(&christoffel(&m, &x));
            assert!((k - want).abs() < 1e-12, "oracle gives {k} at {x:?}");
        }
    }
}

#[test]
fn gauss_curvature_matches_the_christoffel_oracle() {
    for (name, m) in [("poincare-half-plane", half_plane()), ("sphere-stereographic", sphere())] {
        let spec = gallery::load(name);
        for pt in points(&spec, 100) {
            let oracle = sectional(&christoffel(&m, &pt.x));
            // κ is 1-homogeneous in y; the classical value is κ/F
            let f = evaluate(spec.finsler_function().unwrap(), &pt.x, &pt.y).unwrap();
            let k = gauss_curvature(&spec, &pt).unwrap() / f;
            assert!((k - oracle).abs() < 1e-6, "{name} at {pt}: engine {k}, oracle {oracle}");
        }
    }
}

#[test]
fn spray_is_half_the_christoffel_quadratic_form() {
    for (name, m) in [("poincare-half-plane", half_plane()), ("sphere-stereographic", sphere())] {
        let spec = gallery::load(name);
        let engine = Engine::new(&spec, EngineOptions::default()).unwrap();
        for pt in points(&spec, 30) {
            let c = christoffel(&m, &pt.x);
            let g = engine.spray_values(&pt).unwrap();
            for i in 0..N {
                let want: f64 = (0..N).flat_map(|j| (0..N).map(move |k| (j, k))).map(|(j, k)| 0.5 * c.gamma[i][j][k] * pt.y[j] * pt.y[k]).sum();
                assert!((g[i] - want).abs() < 1e-12 * (1.0 + want.abs()), "{name} G^{i} at {pt}: {} vs {want}", g[i]);
            }
        }
    }
}

#[test]
fn affine_curvature_is_the_riemann_tensor() {
    // For a quadratic spray H^i_{jkh} does not depend on y and equals Riem^i_{hjk}.
    for (name, m) in [("poincare-half-plane", half_plane()), ("sphere-stereographic", sphere())] {
        let spec = gallery::load(name);
        let engine = Engine::new(&spec, EngineOptions::default()).unwrap();
        for pt in points(&spec, 20) {
            let c = christoffel(&m, &pt.x);
            let fr = engine.frame(&pt).unwrap();
            let h = Pack::new(&fr).affine();
            for i in 0..N {
                for j in 0..N {
                    for k in 0..N {
                        for hh in 0..N {
                            let got = h.at(&[i, j, k, hh]).value();
                            let want = c.riem[i][hh][j][k];
                            assert!((got - want).abs() < 1e-9 * (1.0 + want.abs()), "{name} H[{i}{j}{k}{hh}] at {pt}: {got} vs {want}");
                        }
                    }
                }
            }
        }
    }
}
