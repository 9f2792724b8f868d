//! Vertex enumeration for tiny exact polytopes (dimension 0, 1 or 2).

use crate::rational::{solve_2x2, Rational, Solution2x2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Relation {
    /// `coeffs · v + constant == 0`
    Eq,
    /// `coeffs · v + constant >= 0`
    Ge,
}

#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
    pub relation: Relation,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, constant: Rational, relation: Relation) -> Self {
        Self { coeffs, constant, relation }
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.coeffs.iter().zip(point).fold(self.constant.clone(), |acc, (c, v)| acc + c * v)
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        let v = self.eval(point);
        match self.relation {
            Relation::Eq => v.is_zero(),
            Relation::Ge => !v.is_negative(),
        }
    }
}

/// Box constraints `0 <= v_i <= 1` for every coordinate.
pub(crate) fn unit_box(dim: usize) -> Vec<Constraint> {
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let unit = |sign: i64| {
            (0..dim).map(|j| if j == i { Rational::from(sign) } else { Rational::zero() }).collect::<Vec<_>>()
        };
        out.push(Constraint::new(unit(1), Rational::zero(), Relation::Ge));
        out.push(Constraint::new(unit(-1), Rational::one(), Relation::Ge));
    }
    out
}

/// Extreme points of `{v : all constraints hold}`, sorted and deduplicated.
///
/// Callers must include bounding constraints; an unbounded set would be
/// reported by its finitely many vertices only.
pub(crate) fn vertices(dim: usize, constraints: &[Constraint]) -> Vec<Vec<Rational>> {
    let feasible = |p: &Vec<Rational>| constraints.iter().all(|c| c.holds(p));
    let mut candidates: Vec<Vec<Rational>> = match dim {
        0 => vec![Vec::new()],
        1 => constraints.iter().filter(|c| !c.coeffs[0].is_zero()).map(|c| vec![-&c.constant / &c.coeffs[0]]).collect(),
        2 => {
            let lines: Vec<&Constraint> =
                constraints.iter().filter(|c| c.coeffs.iter().any(|v| !v.is_zero())).collect();
            let mut pts = Vec::new();
            for (i, l1) in lines.iter().enumerate() {
                for l2 in &lines[i + 1..] {
                    let sol = solve_2x2(
                        &l1.coeffs[0],
                        &l1.coeffs[1],
                        &l2.coeffs[0],
                        &l2.coeffs[1],
                        &-&l1.constant,
                        &-&l2.constant,
                    );
                    if let Solution2x2::Unique { x1, x2 } = sol {
                        pts.push(vec![x1, x2]);
                    }
                }
            }
            pts
        }
        _ => unimplemented!("polytopes above dimension 2 are not needed"),
    };
    candidates.retain(feasible);
    candidates.sort();
    candidates.dedup();
    if dim == 1 && candidates.len() > 2 {
        let last = candidates.pop().expect("non-empty");
        candidates.truncate(1);
        candidates.push(last);
    }
    candidates
}

/// Arithmetic mean of the vertices; lies in the relative interior.
pub(crate) fn centroid(vertices: &[Vec<Rational>], dim: usize) -> Vec<Rational> {
    let n = Rational::from(vertices.len() as i64);
    (0..dim).map(|i| vertices.iter().map(|v| &v[i]).sum::<Rational>() / n.clone()).collect()
}
