//! Delivery periods of exchange contracts.
//!
//! Contracts are identified only by their relative horizon, so the period a
//! quote refers to follows from the quote date with plain calendar
//! arithmetic: `M1` is the next full calendar month, `M2` the one after;
//! `Qk` is the k-th full calendar quarter ahead and `Yk` the k-th full
//! calendar year ahead.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::types::Horizon;

/// Inclusive date interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }
}

fn first_of_month(year: i32, month0: i32) -> NaiveDate {
    let y = year + month0.div_euclid(12);
    let m = month0.rem_euclid(12) as u32 + 1;
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month")
}

/// Delivery period of the `horizon` contract quoted on `quote_date`.
pub fn delivery_period(quote_date: NaiveDate, horizon: Horizon) -> DateRange {
    let year = quote_date.year();
    let month0 = quote_date.month0() as i32;
    let (start_month0, months) = match horizon {
        Horizon::M1 => (month0 + 1, 1),
        Horizon::M2 => (month0 + 2, 1),
        Horizon::Q1 | Horizon::Q2 | Horizon::Q3 => {
            let ahead = match horizon {
                Horizon::Q1 => 1,
                Horizon::Q2 => 2,
                _ => 3,
            };
            ((month0 / 3 + ahead) * 3, 3)
        }
        Horizon::Y1 => (12, 12),
        Horizon::Y2 => (24, 12),
        Horizon::Y3 => (36, 12),
    };
    let start = first_of_month(year, start_month0);
    let end = first_of_month(year, start_month0 + months)
        .pred_opt()
        .expect("date after epoch start");
    DateRange { start, end }
}
