use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use affmin::affine_core::{best_affine, residual_samples, residual_sup, ApproximationResult};
use affmin::cheb1d::{best_line, hyperbola_best_line, verify_equioscillation, BestLine};
use affmin::convexity::{classify_regions, triangle_admissible, Homography};
use affmin::funcspec::{catalog, parse_field, ScalarField};
use affmin::geometry::{random_simplex, Simplex};
use affmin::oracle::{solve_discrete_minimax, DiscreteMinimaxProblem};
use affmin::warp::{best_affine_map, displacement_error, taylor_affine, warp_image, Image, PlaneMap, Sampling};
use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{Cli, Command, DomainArgs, Method, SamplingArg};

/// Lifts a module error into [`affmin::Error`] so the exit code can be read
/// back from the error chain.
trait CoreResult<T> {
    fn core(self) -> Result<T>;
}

impl<T, E: Into<affmin::Error>> CoreResult<T> for std::result::Result<T, E> {
    fn core(self) -> Result<T> {
        self.map_err(|e| anyhow::Error::new(e.into()))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let grid = cli.grid as usize;
    match cli.command {
        Command::Approx {
            domain,
            field,
            convexity,
            residuals,
            out,
        } => {
            let s = read_domain(&domain)?;
            let f = read_field(&field, s.dim())?;
            let r = best_affine(&s, &f, convexity).core()?;
            let sup = residual_sup(&s, &f, &r.sigma, grid).core()?;
            if let Some(path) = residuals {
                write_residuals(&path, &s, &f, &r, grid)?;
            }
            let mut doc = approximation_json(&r);
            doc["sup_residual"] = json!(sup.sup_abs_residual);
            doc["grid"] = json!(grid);
            emit(&doc, out.as_deref())
        }
        Command::Line {
            interval,
            field,
            hyperbola,
            convexity,
            out,
        } => {
            let [p, q] = parse_pair(&interval).context("--interval")?;
            let (line, f) = match (field, hyperbola) {
                (Some(text), _) => {
                    let f = read_field(&text, 1)?;
                    (best_line(p, q, &f, convexity).core()?, f)
                }
                (None, Some(coeffs)) => {
                    let c = parse_list(&coeffs).context("--hyperbola")?;
                    let [a, b, cc, e] = c[..] else {
                        bail!("--hyperbola takes four numbers a,b,c,e")
                    };
                    let f = ScalarField::new(1, "hyperbola", move |x| Ok((a * x[0] + b) / (cc * x[0] + e)));
                    (hyperbola_best_line(a, b, cc, e, p, q).core()?, f)
                }
                (None, None) => bail!("either --field or --hyperbola is required"),
            };
            let cert = verify_equioscillation(&f, &line.to_affine(), p, q, grid.max(4096)).core()?;
            let mut doc = line_json(&line);
            doc["certificate"] = serde_json::to_value(cert)?;
            emit(&doc, out.as_deref())
        }
        Command::Regions { homography, out } => {
            let h = read_homography(&homography)?;
            let partition = classify_regions(&h).core()?;
            emit(&serde_json::to_value(partition)?, out.as_deref())
        }
        Command::Admissible {
            homography,
            triangle,
            out,
        } => {
            let h = read_homography(&homography)?;
            let tri = read_simplex(&triangle)?;
            let report = triangle_admissible(&h, &tri).core()?;
            let mut doc = serde_json::to_value(&report)?;
            doc["reason"] = json!(report.reason());
            emit(&doc, out.as_deref())
        }
        Command::Warp {
            input,
            homography,
            method,
            triangle,
            center,
            sampling,
            size,
            out,
            stats,
        } => {
            let img = Image::read_ppm(&input)
                .core()
                .with_context(|| format!("reading {}", input.display()))?;
            let h = read_homography(&homography)?;
            let tri = triangle.as_deref().map(read_simplex).transpose()?;
            let (w, ht) = match size {
                Some(text) => parse_size(&text)?,
                None => (img.width(), img.height()),
            };
            let affine = match method {
                Method::Exact => None,
                Method::Affine => {
                    let tri = tri
                        .as_ref()
                        .ok_or_else(|| anyhow!("--method affine needs --triangle"))?;
                    Some(best_affine_map(&h, tri).core()?.map)
                }
                Method::Taylor => {
                    let c = match (&center, &tri) {
                        (Some(text), _) => parse_pair(text).context("--center")?,
                        (None, Some(t)) => {
                            let c = t.centroid();
                            [c[0], c[1]]
                        }
                        (None, None) => bail!("--method taylor needs --center or --triangle"),
                    };
                    Some(taylor_affine(&h, c).core()?)
                }
            };
            let map = match &affine {
                Some(a) => PlaneMap::Affine(a.clone()),
                None => PlaneMap::Projective(h),
            };
            let sampling = match sampling {
                SamplingArg::Nearest => Sampling::Nearest,
                SamplingArg::Bilinear => Sampling::Bilinear,
            };
            let warped = warp_image(&img, &map, w, ht, sampling).core()?;
            warped
                .write_ppm(&out)
                .core()
                .with_context(|| format!("writing {}", out.display()))?;
            if let (Some(path), Some(tri)) = (stats, tri) {
                let st = match &affine {
                    Some(a) => Some(displacement_error(&h, a, &tri, grid).core()?),
                    None => None,
                };
                let row = match st {
                    Some(s) => format!("{},{},{},{},{}", method_name(method), s.sup_px, s.mean_px, s.d1, s.d2),
                    None => format!("{},0,0,0,0", method_name(method)),
                };
                append_csv(&path, "method,sup_px,mean_px,d1,d2", &row)?;
            }
            Ok(())
        }
        Command::Verify {
            field,
            domain,
            random_quadratic,
            convexity,
            out,
        } => {
            let (s, f) = match (random_quadratic, field) {
                (Some(k), _) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    let s = random_simplex(k, 2.0, 0.05, &mut rng);
                    (s, catalog::random_convex_quadratic(k, &mut rng))
                }
                (None, Some(text)) => {
                    let s = read_domain(&domain)?;
                    let f = read_field(&text, s.dim())?;
                    (s, f)
                }
                (None, None) => bail!("either --field with a domain or --random-quadratic is required"),
            };
            let r = best_affine(&s, &f, convexity).core()?;
            let problem =
                DiscreteMinimaxProblem::from_lattice(&s, &f, grid, std::slice::from_ref(&r.witness)).core()?;
            let oracle = solve_discrete_minimax(&problem).core()?;
            let achieved = problem_sup(&problem, &r);
            let gap = achieved - oracle.optimum;
            let bound = 5e-3 * r.d + 1e-9;
            let mut doc = approximation_json(&r);
            doc["vertices"] = s.to_json_value()["vertices"].clone();
            doc["field"] = json!(f.label());
            doc["oracle_optimum"] = json!(oracle.optimum);
            doc["oracle_certified"] = json!(oracle.certified);
            doc["sup_residual"] = json!(achieved);
            doc["gap"] = json!(gap);
            doc["gap_bound"] = json!(bound);
            doc["within_bound"] = json!(gap <= bound);
            doc["grid"] = json!(grid);
            emit(&doc, out.as_deref())
        }
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exact => "exact",
        Method::Affine => "affine",
        Method::Taylor => "taylor",
    }
}

fn problem_sup(p: &DiscreteMinimaxProblem, r: &ApproximationResult) -> f64 {
    p.points()
        .iter()
        .zip(p.values())
        .map(|(x, v)| (v - r.sigma.eval(x)).abs())
        .fold(0.0, f64::max)
}

fn approximation_json(r: &ApproximationResult) -> Value {
    json!({
        "alpha": r.sigma.alpha,
        "beta": r.sigma.beta,
        "d": r.d,
        "witness": r.witness,
        "vertex_residuals": r.vertex_residuals,
        "beta_double_prime": r.beta_double_prime,
        "convexity": r.convexity_used,
        "route": r.route,
        "converged": r.search.converged,
        "iterations": r.search.iterations,
    })
}

fn line_json(l: &BestLine) -> Value {
    let a = l.to_affine();
    json!({
        "p": l.p,
        "q": l.q,
        "slope": l.m,
        "alpha": a.alpha,
        "beta": a.beta,
        "d": l.d,
        "witness": [l.y],
        "convexity": l.convexity_used,
    })
}

fn emit(doc: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn append_csv(path: &Path, header: &str, row: &str) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(file, "{header}")?;
    }
    writeln!(file, "{row}")?;
    Ok(())
}

fn write_residuals(path: &Path, s: &Simplex, f: &ScalarField, r: &ApproximationResult, grid: usize) -> Result<()> {
    let samples = residual_samples(s, f, &r.sigma, grid).core()?;
    let mut text = String::new();
    let k = s.dim();
    let coords: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    text.push_str(&format!("{},residual\n", coords.join(",")));
    for (lp, res) in samples {
        let xs: Vec<String> = lp.point.iter().map(|v| v.to_string()).collect();
        text.push_str(&format!("{},{res}\n", xs.join(",")));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_field(text: &str, k: usize) -> Result<ScalarField> {
    if let Some(name) = text.strip_prefix("builtin:") {
        return catalog::by_name(name, k).ok_or_else(|| {
            anyhow!(
                "unknown builtin `{name}` for dimension {k} (known: {})",
                catalog::NAMES.join(", ")
            )
        });
    }
    parse_field(text, k).core().context("--field")
}

fn read_simplex(path: &Path) -> Result<Simplex> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Simplex::from_json_str(&text)
        .core()
        .with_context(|| format!("in {}", path.display()))
}

fn read_homography(path: &Path) -> Result<Homography> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Homography::from_json_str(&text)
        .core()
        .with_context(|| format!("in {}", path.display()))
}

fn read_domain(d: &DomainArgs) -> Result<Simplex> {
    if let Some(path) = &d.simplex {
        return read_simplex(path);
    }
    if let Some(text) = &d.vertices {
        let rows = text
            .split(';')
            .map(parse_list)
            .collect::<Result<Vec<_>>>()
            .context("--vertices")?;
        return Simplex::from_rows(&rows).core();
    }
    if let Some(text) = &d.interval {
        let [p, q] = parse_pair(text).context("--interval")?;
        return Simplex::from_rows(&[[p], [q]]).core();
    }
    bail!("a domain is required: --simplex, --vertices or --interval")
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("`{}`: {e}", t.trim())))
        .collect()
}

fn parse_pair(text: &str) -> Result<[f64; 2]> {
    match parse_list(text)?[..] {
        [a, b] => Ok([a, b]),
        _ => bail!("expected two comma-separated numbers, got `{text}`"),
    }
}

fn parse_size(text: &str) -> Result<(usize, usize)> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("--size must look like WxH"))?;
    Ok((w.trim().parse()?, h.trim().parse()?))
}
