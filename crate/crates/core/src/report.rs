//! Coefficient tables: one block per horizon and epoch, one row per
//! covariate (`SA`, `SS`, `FW`, `WA`), one column per observed area.
//! Areas without hydro power show `NA` for the reservoir coefficient;
//! combinations that could not be fitted show `-`.

use std::fmt::Write as _;

use crate::posterior::PosteriorSet;
use crate::types::{AreaConfig, AreaId, Covariate, Epoch, Horizon};

/// Row order of the table.
pub const ROW_ORDER: [Covariate; 4] = [
    Covariate::AreaSpot,
    Covariate::SystemSpot,
    Covariate::Forward,
    Covariate::Reservoir,
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value(f64),
    NotApplicable,
    Missing,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Value(v) => {
                let s = format!("{v:.3}");
                if s == "-0.000" {
                    "0.000".into()
                } else {
                    s
                }
            }
            Cell::NotApplicable => "NA".into(),
            Cell::Missing => "-".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableBlock {
    pub horizon: Horizon,
    pub epoch: Epoch,
    /// `cells[row][column]`, rows in [`ROW_ORDER`].
    pub cells: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub areas: Vec<AreaId>,
    pub blocks: Vec<TableBlock>,
}

pub fn row_label(c: Covariate) -> String {
    format!("beta_{}", c.as_str())
}

pub fn coefficient_table(
    set: &PosteriorSet,
    config: &AreaConfig,
    horizons: &[Horizon],
    epochs: &[Epoch],
) -> CoefficientTable {
    let areas: Vec<AreaId> = config.observed().map(|a| a.id.clone()).collect();
    let mut blocks = Vec::new();
    for &h in horizons {
        for e in epochs {
            let cells = ROW_ORDER
                .iter()
                .map(|&c| {
                    areas
                        .iter()
                        .map(|a| {
                            let hydro = config.get(a).is_some_and(|i| i.has_hydro);
                            if c == Covariate::Reservoir && !hydro {
                                return Cell::NotApplicable;
                            }
                            set.get(a, h, e)
                                .and_then(|s| s.coefficient(c))
                                .map_or(Cell::Missing, Cell::Value)
                        })
                        .collect()
                })
                .collect();
            blocks.push(TableBlock {
                horizon: h,
                epoch: *e,
                cells,
            });
        }
    }
    CoefficientTable { areas, blocks }
}

impl CoefficientTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for b in &self.blocks {
            write!(s, "{:<10}", format!("{}", b.horizon)).unwrap();
            for a in &self.areas {
                write!(s, "{:>9}", a.as_str()).unwrap();
            }
            writeln!(s, "    [{}]", b.epoch).unwrap();
            for (c, row) in ROW_ORDER.iter().zip(&b.cells) {
                write!(s, "{:<10}", row_label(*c)).unwrap();
                for cell in row {
                    write!(s, "{:>9}", cell.render()).unwrap();
                }
                s.push('\n');
            }
            s.push('\n');
        }
        s
    }

    /// `horizon,epoch,coefficient,<area>...`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("horizon,epoch,coefficient");
        for a in &self.areas {
            write!(s, ",{a}").unwrap();
        }
        s.push('\n');
        for b in &self.blocks {
            for (c, row) in ROW_ORDER.iter().zip(&b.cells) {
                write!(s, "{},{},{}", b.horizon, b.epoch, row_label(*c)).unwrap();
                for cell in row {
                    write!(s, ",{}", cell.render()).unwrap();
                }
                s.push('\n');
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(Cell::Value(0.6234).render(), "0.623");
        assert_eq!(Cell::Value(-0.0004).render(), "0.000");
        assert_eq!(Cell::Value(-0.4496).render(), "-0.450");
        assert_eq!(Cell::NotApplicable.render(), "NA");
    }
}
