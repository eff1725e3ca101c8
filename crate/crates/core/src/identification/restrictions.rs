use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Constraint on one impact-matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Positive,
    Negative,
    Zero,
    Free,
}

impl Cell {
    pub fn symbol(self) -> char {
        match self {
            Cell::Positive => '+',
            Cell::Negative => '-',
            Cell::Zero => '0',
            Cell::Free => '*',
        }
    }

    /// Whether `value` satisfies a sign constraint; zero and free cells
    /// always pass here.
    pub fn sign_holds(self, value: f64) -> bool {
        match self {
            Cell::Positive => value > 0.0,
            Cell::Negative => value < 0.0,
            Cell::Zero | Cell::Free => true,
        }
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" => Ok(Cell::Positive),
            "-" => Ok(Cell::Negative),
            "0" => Ok(Cell::Zero),
            "*" | "." => Ok(Cell::Free),
            other => Err(Error::InvalidInput(format!("restriction symbol {other:?} is not one of + - 0 *"))),
        }
    }
}

/// Sign and zero restrictions on the impact matrix. `cells[i][j]` constrains
/// the response of variable `i` to shock `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictionSet {
    shocks: Vec<String>,
    cells: Vec<Vec<Cell>>,
}

pub const PAPER_SHOCKS: [&str; 5] = ["gas", "supply", "expectations", "demand", "sentiment"];

/// Restrictions for (real gas price, core inflation, inflation expectations,
/// unemployment, confidence) against (gas, aggregate supply, pure
/// expectations, aggregate demand, sentiment) shocks.
pub fn paper_restrictions() -> RestrictionSet {
    let grid = "\
        + - 0 + 0\n\
        + + 0 + 0\n\
        + + + + +\n\
        + + 0 - +\n\
        0 - * + +\n";
    let mut set = RestrictionSet::parse(grid).expect("builtin grid parses");
    set.shocks = PAPER_SHOCKS.iter().map(|s| s.to_string()).collect();
    set
}

impl RestrictionSet {
    /// Unrestricted `n x n` set with shocks named `shock1..`.
    pub fn unrestricted(n: usize) -> Self {
        Self {
            shocks: (1..=n).map(|j| format!("shock{j}")).collect(),
            cells: vec![vec![Cell::Free; n]; n],
        }
    }

    pub fn from_grid(cells: Vec<Vec<Cell>>, shocks: Option<Vec<String>>) -> Result<Self> {
        let n = cells.len();
        if n == 0 || cells.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension("restriction grid must be square and non-empty".into()));
        }
        let shocks = shocks.unwrap_or_else(|| Self::unrestricted(n).shocks);
        if shocks.len() != n {
            return Err(Error::Dimension(format!("{} shock names for {n} columns", shocks.len())));
        }
        let set = Self { shocks, cells };
        set.validate()?;
        Ok(set)
    }

    /// Adds a constraint. Conflicts with an existing non-free constraint on
    /// the same entry are rejected.
    pub fn set(&mut self, variable: usize, shock: usize, cell: Cell) -> Result<()> {
        let n = self.n();
        if variable >= n || shock >= n {
            return Err(Error::Dimension(format!("entry ({variable}, {shock}) outside {n} x {n}")));
        }
        let current = self.cells[variable][shock];
        if current != Cell::Free && cell != Cell::Free && current != cell {
            return Err(Error::InvalidInput(format!(
                "contradictory restrictions on (variable {variable}, shock {}): {} and {}",
                self.shocks[shock],
                current.symbol(),
                cell.symbol()
            )));
        }
        if cell != Cell::Free {
            self.cells[variable][shock] = cell;
        }
        self.validate()
    }

    pub fn n(&self) -> usize {
        self.cells.len()
    }

    pub fn shocks(&self) -> &[String] {
        &self.shocks
    }

    pub fn cell(&self, variable: usize, shock: usize) -> Cell {
        self.cells[variable][shock]
    }

    /// Variables with a zero response to `shock`.
    pub fn zeros(&self, shock: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.cells[i][shock] == Cell::Zero).collect()
    }

    pub fn zero_counts(&self) -> Vec<usize> {
        (0..self.n()).map(|j| self.zeros(j).len()).collect()
    }

    pub fn has_zeros(&self) -> bool {
        self.cells.iter().flatten().any(|c| *c == Cell::Zero)
    }

    /// Shocks sorted by decreasing number of zeros, ties in column order.
    pub fn processing_order(&self) -> Vec<usize> {
        let counts = self.zero_counts();
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|a, b| counts[*b].cmp(&counts[*a]).then(a.cmp(b)));
        order
    }

    /// Checks that every shock still has a non-empty null space when processed
    /// in [`Self::processing_order`].
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let counts = self.zero_counts();
        for (rank, &j) in self.processing_order().iter().enumerate() {
            if counts[j] + rank > n - 1 {
                return Err(Error::Infeasible(format!(
                    "shock {} has {} zero restrictions but only {} free dimensions remain",
                    self.shocks[j],
                    counts[j],
                    n - 1 - rank.min(n - 1)
                )));
            }
        }
        Ok(())
    }

    /// True when `impact` meets every sign constraint strictly and every zero
    /// constraint within `zero_tol`.
    pub fn is_satisfied(&self, impact: &nalgebra::DMatrix<f64>, zero_tol: f64) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            (0..n).all(|j| match self.cells[i][j] {
                Cell::Zero => impact[(i, j)].abs() < zero_tol,
                c => c.sign_holds(impact[(i, j)]),
            })
        })
    }

    /// Parses a whitespace-separated grid of `+ - 0 *`, one row per variable.
    /// Blank lines and `#` comments are skipped; an optional
    /// `shocks = a, b, ...` line names the columns.
    pub fn parse(text: &str) -> Result<Self> {
        let mut shocks = None;
        let mut cells = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("shocks") {
                let names = rest.trim_start().strip_prefix('=').ok_or_else(|| Error::Parse {
                    location: format!("line {}", lineno + 1),
                    message: "expected `shocks = name, ...`".into(),
                })?;
                shocks = Some(names.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<Cell>().map_err(|e| Error::Parse {
                        location: format!("line {}", lineno + 1),
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(row);
        }
        Self::from_grid(cells, shocks)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for RestrictionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "shocks = {}", self.shocks.join(", "))?;
        for row in &self.cells {
            let symbols: Vec<String> = row.iter().map(|c| c.symbol().to_string()).collect();
            writeln!(f, "{}", symbols.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_layout() {
        let r = paper_restrictions();
        assert_eq!(r.zero_counts(), vec![1, 0, 3, 0, 2]);
        assert_eq!(r.cell(4, 2), Cell::Free);
        assert_eq!(r.cell(0, 1), Cell::Negative);
        assert_eq!(r.processing_order(), vec![2, 4, 0, 1, 3]);
        let gas: Vec<Cell> = (0..5).map(|i| r.cell(i, 0)).collect();
        assert_eq!(gas, [Cell::Positive, Cell::Positive, Cell::Positive, Cell::Positive, Cell::Zero]);
    }

    #[test]
    fn text_roundtrip() {
        let r = paper_restrictions();
        assert_eq!(RestrictionSet::parse(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn contradiction_is_rejected() {
        let mut r = RestrictionSet::unrestricted(2);
        r.set(0, 0, Cell::Positive).unwrap();
        assert!(r.set(0, 0, Cell::Negative).is_err());
        assert!(r.set(0, 0, Cell::Zero).is_err());
        r.set(0, 0, Cell::Positive).unwrap();
    }

    #[test]
    fn too_many_zeros_is_infeasible() {
        let grid = "0 0\n0 +\n";
        assert!(matches!(RestrictionSet::parse(grid), Err(Error::Infeasible(_))));
        let grid = "0 *\n* 0\n";
        assert!(matches!(RestrictionSet::parse(grid), Err(Error::Infeasible(_))));
        assert!(RestrictionSet::parse("0 *\n* *\n").is_ok());
    }

    #[test]
    fn bad_symbols_and_shapes() {
        assert!(RestrictionSet::parse("+ x\n* *\n").is_err());
        assert!(RestrictionSet::parse("+ *\n*\n").is_err());
        assert!(RestrictionSet::parse("shocks = a\n+ *\n* *\n").is_err());
    }
}
