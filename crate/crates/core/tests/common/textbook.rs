//! Small LPs with optima known in closed form or from the literature.

use padplan::model::{MilpModel, Relation};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Expected {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

const INF: f64 = f64::INFINITY;

struct Lp {
    m: MilpModel,
}

impl Lp {
    fn new(name: &str) -> Self {
        Lp { m: MilpModel::new(name) }
    }
    fn var(&mut self, lo: f64, hi: f64, cost: f64) -> usize {
        let n = self.m.num_vars();
        self.m.add_continuous(format!("v{n}"), lo, hi, cost)
    }
    fn vars(&mut self, costs: &[f64]) -> Vec<usize> {
        costs.iter().map(|&c| self.var(0.0, INF, c)).collect()
    }
    fn row(&mut self, coeffs: &[(usize, f64)], rel: Relation, rhs: f64) {
        let n = self.m.num_rows();
        self.m.add_constraint(format!("r{n}"), coeffs.to_vec(), rel, rhs);
    }
    fn dense(&mut self, v: &[usize], a: &[f64], rel: Relation, rhs: f64) {
        let c: Vec<(usize, f64)> = v.iter().zip(a).map(|(&j, &x)| (j, x)).collect();
        self.row(&c, rel, rhs);
    }
}

use Relation::{Eq, Ge, Le};

pub fn suite() -> Vec<(&'static str, MilpModel, Expected)> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, lp: Lp, e: Expected| out.push((name, lp.m, e));

    let mut lp = Lp::new("bounded");
    let x = lp.var(0.0, INF, 1.0);
    lp.row(&[(x, 1.0)], Ge, 3.0);
    lp.row(&[(x, 1.0)], Le, 10.0);
    push("bound-constrained", lp, Expected::Optimal(3.0));

    let mut lp = Lp::new("negated-max");
    let v = lp.vars(&[-1.0, -1.0]);
    lp.dense(&v, &[1.0, 1.0], Le, 1.0);
    push("negated max", lp, Expected::Optimal(-1.0));

    // Wyndor Glass: max 3x + 5y
    let mut lp = Lp::new("wyndor");
    let v = lp.vars(&[-3.0, -5.0]);
    lp.dense(&v, &[1.0, 0.0], Le, 4.0);
    lp.dense(&v, &[0.0, 2.0], Le, 12.0);
    lp.dense(&v, &[3.0, 2.0], Le, 18.0);
    push("wyndor glass", lp, Expected::Optimal(-36.0));

    let mut lp = Lp::new("three-by-three");
    let v = lp.vars(&[-5.0, -4.0, -3.0]);
    lp.dense(&v, &[2.0, 3.0, 1.0], Le, 5.0);
    lp.dense(&v, &[4.0, 1.0, 2.0], Le, 11.0);
    lp.dense(&v, &[3.0, 4.0, 2.0], Le, 8.0);
    push("dictionary example", lp, Expected::Optimal(-13.0));

    // cycles under the largest-coefficient rule without anti-cycling
    let mut lp = Lp::new("cycling");
    let v = lp.vars(&[-10.0, 57.0, 9.0, 24.0]);
    lp.dense(&v, &[0.5, -5.5, -2.5, 9.0], Le, 0.0);
    lp.dense(&v, &[0.5, -1.5, -0.5, 1.0], Le, 0.0);
    lp.dense(&v, &[1.0, 0.0, 0.0, 0.0], Le, 1.0);
    push("degenerate cycling", lp, Expected::Optimal(-1.0));

    let mut lp = Lp::new("beale");
    let v = lp.vars(&[-0.75, 150.0, -0.02, 6.0]);
    lp.dense(&v, &[0.25, -60.0, -0.04, 9.0], Le, 0.0);
    lp.dense(&v, &[0.5, -90.0, -0.02, 3.0], Le, 0.0);
    lp.dense(&v, &[0.0, 0.0, 1.0, 0.0], Le, 1.0);
    push("beale degenerate", lp, Expected::Optimal(-0.05));

    let mut lp = Lp::new("klee-minty");
    let v = lp.vars(&[-100.0, -10.0, -1.0]);
    lp.dense(&v, &[1.0, 0.0, 0.0], Le, 1.0);
    lp.dense(&v, &[20.0, 1.0, 0.0], Le, 100.0);
    lp.dense(&v, &[200.0, 20.0, 1.0], Le, 10000.0);
    push("klee-minty cube", lp, Expected::Optimal(-10000.0));

    let mut lp = Lp::new("infeasible-rows");
    let v = lp.vars(&[1.0, 1.0]);
    lp.dense(&v, &[1.0, 1.0], Le, 1.0);
    lp.dense(&v, &[1.0, 1.0], Ge, 2.0);
    push("contradictory rows", lp, Expected::Infeasible);

    let mut lp = Lp::new("infeasible-eq");
    let x = lp.var(-INF, INF, 0.0);
    lp.row(&[(x, 1.0)], Eq, 1.0);
    lp.row(&[(x, 1.0)], Eq, 2.0);
    push("contradictory equalities", lp, Expected::Infeasible);

    let mut lp = Lp::new("unbounded");
    let v = lp.vars(&[-1.0, 0.0]);
    lp.dense(&v, &[1.0, -1.0], Le, 1.0);
    push("unbounded ray", lp, Expected::Unbounded);

    let mut lp = Lp::new("square-system");
    let v = lp.vars(&[1.0, 1.0]);
    lp.dense(&v, &[1.0, 2.0], Eq, 4.0);
    lp.dense(&v, &[3.0, 1.0], Eq, 7.0);
    push("square equality system", lp, Expected::Optimal(3.0));

    let mut lp = Lp::new("free-variable");
    let x = lp.var(-INF, INF, 1.0);
    lp.row(&[(x, 1.0)], Ge, -5.0);
    push("free variable", lp, Expected::Optimal(-5.0));

    let mut lp = Lp::new("negative-bounds");
    let x = lp.var(-2.0, 3.0, 1.0);
    let y = lp.var(-1.0, 4.0, 1.0);
    lp.row(&[(x, 1.0), (y, 1.0)], Ge, -2.5);
    push("negative lower bounds", lp, Expected::Optimal(-2.5));

    let mut lp = Lp::new("diet");
    let v = lp.vars(&[2.0, 3.0]);
    lp.dense(&v, &[1.0, 2.0], Ge, 4.0);
    lp.dense(&v, &[3.0, 1.0], Ge, 6.0);
    push("two-nutrient diet", lp, Expected::Optimal(6.8));

    // supplies 20, 30; demands 25, 25
    let mut lp = Lp::new("transportation");
    let v = lp.vars(&[8.0, 6.0, 9.0, 4.0]);
    lp.dense(&v, &[1.0, 1.0, 0.0, 0.0], Eq, 20.0);
    lp.dense(&v, &[0.0, 0.0, 1.0, 1.0], Eq, 30.0);
    lp.dense(&v, &[1.0, 0.0, 1.0, 0.0], Eq, 25.0);
    lp.dense(&v, &[0.0, 1.0, 0.0, 1.0], Eq, 25.0);
    push("balanced transportation", lp, Expected::Optimal(305.0));

    let mut lp = Lp::new("degenerate-vertex");
    let v = lp.vars(&[-1.0, -1.0]);
    lp.dense(&v, &[1.0, 1.0], Le, 1.0);
    lp.dense(&v, &[1.0, 0.0], Le, 1.0);
    lp.dense(&v, &[0.0, 1.0], Le, 1.0);
    lp.dense(&v, &[1.0, 2.0], Le, 1.0);
    push("degenerate vertex", lp, Expected::Optimal(-1.0));

    let mut lp = Lp::new("redundant-equalities");
    let v = lp.vars(&[1.0, -1.0]);
    lp.dense(&v, &[1.0, 1.0], Eq, 2.0);
    lp.dense(&v, &[2.0, 2.0], Eq, 4.0);
    push("redundant equalities", lp, Expected::Optimal(-2.0));

    let mut lp = Lp::new("boxed");
    let v: Vec<usize> = [-2.0, -3.0, -1.0].iter().map(|&c| lp.var(0.0, 1.0, c)).collect();
    lp.dense(&v, &[1.0, 1.0, 1.0], Le, 2.0);
    push("boxed columns", lp, Expected::Optimal(-5.0));

    let mut lp = Lp::new("fractional-knapsack");
    let v: Vec<usize> = [-10.0, -13.0, -7.0].iter().map(|&c| lp.var(0.0, 1.0, c)).collect();
    lp.dense(&v, &[4.0, 6.0, 3.0], Le, 10.0);
    push("fractional knapsack", lp, Expected::Optimal(-23.5));

    let costs = [[4.0, 2.0, 8.0], [4.0, 3.0, 7.0], [3.0, 1.0, 6.0]];
    let mut lp = Lp::new("assignment");
    let v: Vec<usize> = costs.iter().flatten().map(|&c| lp.var(0.0, INF, c)).collect();
    for i in 0..3 {
        let row: Vec<(usize, f64)> = (0..3).map(|j| (v[3 * i + j], 1.0)).collect();
        lp.row(&row, Eq, 1.0);
        let col: Vec<(usize, f64)> = (0..3).map(|j| (v[3 * j + i], 1.0)).collect();
        lp.row(&col, Eq, 1.0);
    }
    push("assignment relaxation", lp, Expected::Optimal(12.0));

    let mut lp = Lp::new("zero-objective");
    let v = lp.vars(&[0.0, 0.0]);
    lp.dense(&v, &[1.0, 1.0], Ge, 1.0);
    push("zero objective", lp, Expected::Optimal(0.0));

    let mut lp = Lp::new("no-rows");
    lp.var(-1.0, 2.0, 1.0);
    push("no rows", lp, Expected::Optimal(-1.0));

    let mut lp = Lp::new("fixed-column");
    let x = lp.var(2.0, 2.0, 1.0);
    let y = lp.var(-10.0, INF, 1.0);
    lp.row(&[(y, 1.0), (x, -1.0)], Ge, -5.0);
    push("fixed column", lp, Expected::Optimal(-1.0));

    let mut lp = Lp::new("alternative-optima");
    let v = lp.vars(&[-2.0, -2.0]);
    lp.dense(&v, &[1.0, 1.0], Le, 4.0);
    lp.dense(&v, &[1.0, 3.0], Le, 6.0);
    lp.dense(&v, &[1.0, 0.0], Le, 3.0);
    push("alternative optima", lp, Expected::Optimal(-8.0));

    let mut lp = Lp::new("infeasible-bounds");
    let x = lp.var(0.0, 1.0, 0.0);
    let y = lp.var(0.0, 1.0, 0.0);
    lp.row(&[(x, 1.0), (y, 1.0)], Ge, 3.0);
    push("bounds versus row", lp, Expected::Infeasible);

    let mut lp = Lp::new("unbounded-free");
    let x = lp.var(-INF, INF, 1.0);
    let y = lp.var(0.0, INF, 0.0);
    lp.row(&[(x, 1.0), (y, -1.0)], Le, 0.0);
    push("unbounded free column", lp, Expected::Unbounded);

    out
}
