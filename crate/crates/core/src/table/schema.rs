use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of nested `Array` levels a column may use.
pub const MAX_ARRAY_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DataType {
    Text,
    Int64,
    Float64,
    Array(Box<DataType>),
}

impl DataType {
    pub fn array_of(element: DataType) -> Self {
        DataType::Array(Box::new(element))
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, DataType::Array(_))
    }

    /// Number of `Array` wrappers around the innermost scalar.
    pub fn array_depth(&self) -> usize {
        match self {
            DataType::Array(e) => 1 + e.array_depth(),
            _ => 0,
        }
    }

    pub fn element(&self) -> Option<&DataType> {
        match self {
            DataType::Array(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::Text => f.write_str("Text"),
            DataType::Int64 => f.write_str("Int64"),
            DataType::Float64 => f.write_str("Float64"),
            DataType::Array(e) => write!(f, "Array({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnDef {
    pub name: String,
    pub data_type: DataType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, data_type: DataType) -> Self {
        ColumnDef {
            name: name.into(),
            data_type,
        }
    }
}

/// Ordered, validated list of columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    columns: Vec<ColumnDef>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnDef>) -> Result<Self> {
        validate(&columns)?;
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnDef] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn {
                name: name.to_owned(),
                available: self.names(),
            })
    }

    pub fn column(&self, name: &str) -> Result<&ColumnDef> {
        self.index_of(name).map(|i| &self.columns[i])
    }
}

pub(crate) fn validate(columns: &[ColumnDef]) -> Result<()> {
    let mut seen = HashSet::new();
    for c in columns {
        if c.name.is_empty() {
            return Err(Error::Schema("column names must be non-empty".into()));
        }
        if !seen.insert(c.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
        }
        if c.data_type.array_depth() > MAX_ARRAY_DEPTH {
            return Err(Error::Schema(format!(
                "column `{}` nests arrays {} deep (max {MAX_ARRAY_DEPTH})",
                c.name,
                c.data_type.array_depth()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty_names() {
        let dup = vec![
            ColumnDef::new("a", DataType::Text),
            ColumnDef::new("a", DataType::Int64),
        ];
        assert!(matches!(Schema::new(dup), Err(Error::Schema(_))));
        assert!(Schema::new(vec![ColumnDef::new("", DataType::Text)]).is_err());
    }

    #[test]
    fn array_depth_cap() {
        let two = DataType::array_of(DataType::array_of(DataType::Text));
        assert!(Schema::new(vec![ColumnDef::new("x", two.clone())]).is_ok());
        let three = DataType::array_of(two);
        assert!(matches!(
            Schema::new(vec![ColumnDef::new("x", three)]),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn unknown_column_lists_available() {
        let s = Schema::new(vec![ColumnDef::new("term", DataType::Text)]).unwrap();
        match s.index_of("freq") {
            Err(Error::UnknownColumn { name, available }) => {
                assert_eq!(name, "freq");
                assert_eq!(available, vec!["term"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn display() {
        assert_eq!(
            DataType::array_of(DataType::array_of(DataType::Float64)).to_string(),
            "Array(Array(Float64))"
        );
    }
}
