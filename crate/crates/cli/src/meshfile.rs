//! Plain-text triangle meshes.
//!
//! ```text
//! nodes 4 elements 2
//! 0 0
//! 1 0
//! 1 1
//! 0 1
//! 0 1 2          # counter-clockwise, zero-based
//! 0 2 3
//! rule x=0 dirichlet 0
//! rule x=1 neumann 1
//! rule all neumann 0
//! ```
//!
//! A boundary edge takes the first rule whose selector holds at both end
//! points. Selectors are `x=<v>`, `y=<v>`, `r=<v>` (distance from the origin)
//! and `all`; kinds are `dirichlet`, `neumann`, `roller_x` (only `u_x` fixed)
//! and `roller_y`. The trailing integer is the boundary group.

use std::path::Path;

use crestim::{BoundaryCondition, Mesh};
use nalgebra::Point2;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selector {
    X(f64),
    Y(f64),
    Radius(f64),
    All,
}

impl Selector {
    pub fn holds(&self, p: &Point2<f64>) -> bool {
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
        match *self {
            Selector::X(v) => near(p.x, v),
            Selector::Y(v) => near(p.y, v),
            Selector::Radius(v) => near(p.coords.norm(), v),
            Selector::All => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rule {
    pub selector: Selector,
    pub condition: BoundaryCondition,
}

#[derive(Debug, Clone)]
pub struct MeshFile {
    pub nodes: Vec<Point2<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub rules: Vec<Rule>,
}

impl MeshFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, m: &str| CliError::Validation(format!("line {line}: {m}"));

        let (hl, header) = lines.next().ok_or_else(|| err(0, "empty mesh file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let (nn, ne) = match h.as_slice() {
            ["nodes", n, "elements", m] => (
                n.parse::<usize>().map_err(|_| err(hl, "bad node count"))?,
                m.parse::<usize>().map_err(|_| err(hl, "bad element count"))?,
            ),
            _ => return Err(err(hl, "expected 'nodes <N> elements <M>'")),
        };

        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            let (ln, l) = lines.next().ok_or_else(|| err(hl, "too few node lines"))?;
            let v: Vec<f64> = l.split_whitespace().map(|s| s.parse().map_err(|_| err(ln, "bad coordinate"))).collect::<CliResult<_>>()?;
            match v.as_slice() {
                [x, y] => nodes.push(Point2::new(*x, *y)),
                _ => return Err(err(ln, "expected two coordinates")),
            }
        }
        let mut triangles = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, l) = lines.next().ok_or_else(|| err(hl, "too few element lines"))?;
            let v: Vec<usize> = l.split_whitespace().map(|s| s.parse().map_err(|_| err(ln, "bad node index"))).collect::<CliResult<_>>()?;
            match v.as_slice() {
                [a, b, c] => triangles.push([*a, *b, *c]),
                _ => return Err(err(ln, "expected three node indices")),
            }
        }
        let mut rules = Vec::new();
        for (ln, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            let ["rule", sel, kind, group] = t.as_slice() else {
                return Err(err(ln, "expected 'rule <selector> <kind> <group>'"));
            };
            let selector = parse_selector(sel).ok_or_else(|| err(ln, &format!("bad selector '{sel}'")))?;
            let group: usize = group.parse().map_err(|_| err(ln, "bad group"))?;
            let condition = match *kind {
                "dirichlet" => BoundaryCondition::dirichlet(group),
                "neumann" => BoundaryCondition::neumann(group),
                "roller_x" => BoundaryCondition::roller_x(group),
                "roller_y" => BoundaryCondition::roller_y(group),
                other => return Err(err(ln, &format!("unknown boundary kind '{other}'"))),
            };
            rules.push(Rule { selector, condition });
        }
        Ok(MeshFile { nodes, triangles, rules })
    }

    pub fn build(self) -> CliResult<Mesh> {
        let rules = self.rules;
        let spec = move |a: &Point2<f64>, b: &Point2<f64>| {
            rules.iter().find(|r| r.selector.holds(a) && r.selector.holds(b)).map(|r| r.condition)
        };
        Mesh::build(self.nodes, self.triangles, &spec).map_err(|e| CliError::core("mesh", e))
    }
}

fn parse_selector(s: &str) -> Option<Selector> {
    if s == "all" {
        return Some(Selector::All);
    }
    let (k, v) = s.split_once('=')?;
    let v: f64 = v.parse().ok()?;
    match k {
        "x" => Some(Selector::X(v)),
        "y" => Some(Selector::Y(v)),
        "r" => Some(Selector::Radius(v)),
        _ => None,
    }
}

pub fn read_mesh(path: &Path) -> CliResult<Mesh> {
    MeshFile::read(path)?.build()
}
