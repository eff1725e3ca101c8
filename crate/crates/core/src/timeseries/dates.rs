use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A calendar quarter, ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuarterIndex {
    year: i32,
    quarter: u8,
}

impl QuarterIndex {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::InvalidInput(format!(
                "quarter must be in 1..=4, got {quarter}"
            )));
        }
        Ok(Self { year, quarter })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.quarter
    }

    /// Number of quarters since year 0 Q1; differences of ordinals give
    /// quarter distances.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        Self {
            year: ordinal.div_euclid(4) as i32,
            quarter: (ordinal.rem_euclid(4) + 1) as u8,
        }
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    pub fn offset(self, quarters: i64) -> Self {
        Self::from_ordinal(self.ordinal() + quarters)
    }

    /// Signed number of quarters from `earlier` to `self`.
    pub fn quarters_since(self, earlier: QuarterIndex) -> i64 {
        self.ordinal() - earlier.ordinal()
    }

    /// Final month of the quarter (3, 6, 9 or 12).
    pub fn last_month(self) -> MonthIndex {
        MonthIndex {
            year: self.year,
            month: self.quarter * 3,
        }
    }
}

impl fmt::Display for QuarterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for QuarterIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::parse(s, "malformed quarterly date, expected YYYYQn");
        let (year, quarter) = s
            .split_once(['Q', 'q'])
            .ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let quarter: u8 = quarter.parse().map_err(|_| bad())?;
        QuarterIndex::new(year, quarter).map_err(|_| bad())
    }
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthIndex {
    year: i32,
    month: u8,
}

impl MonthIndex {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!(
                "month must be in 1..=12, got {month}"
            )));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn quarter(self) -> QuarterIndex {
        QuarterIndex {
            year: self.year,
            quarter: (self.month - 1) / 3 + 1,
        }
    }

    pub fn is_quarter_end(self) -> bool {
        self.month % 3 == 0
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::parse(s, "malformed monthly date, expected YYYY-MM");
        let (year, month) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let month: u8 = month.parse().map_err(|_| bad())?;
        MonthIndex::new(year, month).map_err(|_| bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn successor_wraps_year() {
        let q: QuarterIndex = "2020Q4".parse().unwrap();
        assert_eq!(q.succ(), QuarterIndex::new(2021, 1).unwrap());
        assert_eq!(q.succ().to_string(), "2021Q1");
    }

    #[test]
    fn ordering_and_distance() {
        let a: QuarterIndex = "1999Q4".parse().unwrap();
        let b: QuarterIndex = "2020Q1".parse().unwrap();
        assert!(a < b);
        assert_eq!(b.quarters_since(a), 81);
        assert_eq!(a.offset(81), b);
        assert_eq!(b.offset(-81), a);
    }

    #[test]
    fn rejects_malformed() {
        assert!("2020Q5".parse::<QuarterIndex>().is_err());
        assert!("2020-03".parse::<QuarterIndex>().is_err());
        assert!("20x0Q1".parse::<QuarterIndex>().is_err());
        assert!("2020-13".parse::<MonthIndex>().is_err());
    }

    #[test]
    fn month_to_quarter() {
        let m: MonthIndex = "2022-09".parse().unwrap();
        assert_eq!(m.quarter().to_string(), "2022Q3");
        assert!(m.is_quarter_end());
        assert_eq!(m.quarter().last_month(), m);
        assert_eq!(m.to_string(), "2022-09");
    }
}
