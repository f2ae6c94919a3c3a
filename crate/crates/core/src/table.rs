//! In-memory tables, schema sidecar files and CSV ingestion.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::value::{ColumnType, Value};

pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    columns: Vec<(String, ColumnType)>,
    uid: usize,
}

impl Schema {
    pub fn new(columns: Vec<(String, ColumnType)>, uid_column: &str) -> Result<Schema> {
        let mut seen = HashSet::new();
        for (name, _) in &columns {
            if name.is_empty() {
                return Err(Error::Schema {
                    message: "empty column name".into(),
                });
            }
            if !seen.insert(name.to_ascii_lowercase()) {
                return Err(Error::Schema {
                    message: format!("duplicate column `{name}`"),
                });
            }
        }
        let uid = columns
            .iter()
            .position(|(n, _)| n.eq_ignore_ascii_case(uid_column))
            .ok_or_else(|| Error::MissingUidColumn {
                name: uid_column.to_string(),
            })?;
        Ok(Schema { columns, uid })
    }

    /// Parse a sidecar file: one `name:type` per line, exactly one line
    /// carrying a trailing `uid` marker. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Schema> {
        let mut columns = Vec::new();
        let mut uid = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Schema {
                message: format!("line {}: {message}", lineno + 1),
            };
            let (name, rest) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("expected `name:type`, got {line:?}")))?;
            let mut parts = rest.split_whitespace();
            let ty_name = parts.next().ok_or_else(|| bad("missing type".into()))?;
            let ty = ColumnType::parse(ty_name).ok_or_else(|| bad(format!("unknown type `{ty_name}`")))?;
            match parts.next() {
                None => {}
                Some(marker) if marker.eq_ignore_ascii_case("uid") => {
                    if uid.replace(name.trim().to_string()).is_some() {
                        return Err(bad("more than one uid column".into()));
                    }
                }
                Some(other) => return Err(bad(format!("unexpected `{other}`"))),
            }
            columns.push((name.trim().to_string(), ty));
        }
        let uid = uid.ok_or_else(|| Error::Schema {
            message: "no column is marked `uid`".into(),
        })?;
        Schema::new(columns, &uid)
    }

    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for (i, (name, ty)) in self.columns.iter().enumerate() {
            out.push_str(name);
            out.push(':');
            out.push_str(ty.name());
            if i == self.uid {
                out.push_str(" uid");
            }
            out.push('\n');
        }
        out
    }

    pub fn columns(&self) -> &[(String, ColumnType)] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn uid_index(&self) -> usize {
        self.uid
    }

    pub fn uid_name(&self) -> &str {
        &self.columns[self.uid].0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n.eq_ignore_ascii_case(name))
    }

    pub fn column_type(&self, index: usize) -> ColumnType {
        self.columns[index].1
    }

    pub fn name(&self, index: usize) -> &str {
        &self.columns[index].0
    }

    fn with_uid(&self, uid_column: &str) -> Result<Schema> {
        Schema::new(self.columns.clone(), uid_column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    schema: Schema,
    rows: Vec<Row>,
}

impl Table {
    pub fn new(name: impl Into<String>, schema: Schema, rows: Vec<Row>) -> Result<Table> {
        let uid = schema.uid_index();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Schema {
                    message: format!("row {} has {} values, schema has {}", i + 1, row.len(), schema.len()),
                });
            }
            if row[uid].is_null() {
                return Err(Error::EmptyUid { row: i + 1 });
            }
            for (j, v) in row.iter().enumerate() {
                if let Some(ty) = v.column_type() {
                    let expected = schema.column_type(j);
                    if ty != expected {
                        return Err(Error::CsvParse {
                            row: i + 1,
                            column: schema.name(j).to_string(),
                            message: format!("expected {expected}, found {ty}"),
                        });
                    }
                }
            }
        }
        Ok(Table {
            name: name.into(),
            schema,
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn uid_index(&self) -> usize {
        self.schema.uid_index()
    }

    /// Writes the table as CSV with a header row. NULL becomes an empty cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let header: Vec<&str> = self.schema.columns().iter().map(|(n, _)| n.as_str()).collect();
        writer.write_record(&header).map_err(csv_io)?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_text().unwrap_or_default()).collect();
            writer.write_record(&cells).map_err(csv_io)?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn csv_io(err: csv::Error) -> Error {
    Error::Io {
        message: err.to_string(),
    }
}

/// Load a CSV file whose header must list the schema's columns in order.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, uid_column: &str) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        message: format!("{}: {e}", path.display()),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".to_string());
    read_csv(file, name, schema, uid_column)
}

pub fn read_csv<R: Read>(input: R, name: impl Into<String>, schema: &Schema, uid_column: &str) -> Result<Table> {
    let schema = schema.with_uid(uid_column)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(csv_io)?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let expected: Vec<&str> = schema.columns().iter().map(|(n, _)| n.as_str()).collect();
    if names.len() != expected.len() || names.iter().zip(&expected).any(|(a, b)| !a.eq_ignore_ascii_case(b)) {
        return Err(Error::Schema {
            message: format!("CSV header {names:?} does not match schema {expected:?}"),
        });
    }
    let uid = schema.uid_index();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is line 1.
        let row_no = i + 2;
        let record = record.map_err(|e| Error::CsvParse {
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(schema.len());
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                if j == uid {
                    return Err(Error::EmptyUid { row: row_no });
                }
                row.push(Value::Null);
                continue;
            }
            let value = Value::parse_as(cell, schema.column_type(j)).map_err(|e| Error::CsvParse {
                row: row_no,
                column: schema.name(j).to_string(),
                message: e.to_string(),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    Table::new(name, schema, rows)
}

/// Rows for which the predicate is TRUE; NULL and FALSE are dropped.
/// Input order is preserved.
pub fn scan<P>(table: &Table, predicate: P) -> Vec<&Row>
where
    P: Fn(&Row) -> Option<bool>,
{
    table.rows.iter().filter(|row| predicate(row) == Some(true)).collect()
}

pub fn distinct_uids<'a, I>(rows: I, uid_index: usize) -> HashSet<Value>
where
    I: IntoIterator<Item = &'a Row>,
{
    rows.into_iter().map(|r| r[uid_index].clone()).collect()
}

#[derive(Clone)]
pub struct EngineConfig {
    pub salt: String,
    pub uid_column: String,
    pub default_table: String,
    #[cfg(feature = "layer-hooks")]
    pub layer_toggles: crate::noise::LayerToggles,
}

impl EngineConfig {
    pub fn new(salt: impl Into<String>) -> Result<EngineConfig> {
        let salt = salt.into();
        if salt.is_empty() {
            return Err(Error::Config {
                message: "salt must not be empty".into(),
            });
        }
        Ok(EngineConfig {
            salt,
            uid_column: "uid".into(),
            default_table: "table".into(),
            #[cfg(feature = "layer-hooks")]
            layer_toggles: Default::default(),
        })
    }

    pub fn with_uid_column(mut self, name: impl Into<String>) -> Self {
        self.uid_column = name.into();
        self
    }

    pub fn with_default_table(mut self, name: impl Into<String>) -> Self {
        self.default_table = name.into();
        self
    }
}

impl fmt::Debug for EngineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineConfig")
            .field("salt", &"<redacted>")
            .field("uid_column", &self.uid_column)
            .field("default_table", &self.default_table)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::parse("uid:integer uid\nage:integer\nname:text\n").unwrap()
    }

    #[test]
    fn loads_three_rows() {
        let csv = "uid,age,name\n1,30,a\n2,31,b\n3,32,c\n";
        let t = read_csv(csv.as_bytes(), "t", &schema(), "uid").unwrap();
        assert_eq!(t.rows().len(), 3);
        assert_eq!(t.schema().len(), 3);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let csv = "uid,age,name\n1,30,a\n2,abc,b\n";
        let err = read_csv(csv.as_bytes(), "t", &schema(), "uid").unwrap_err();
        match err {
            Error::CsvParse { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "age");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_cells_become_null_except_uid() {
        let csv = "uid,age,name\n1,,a\n2,5,\n3,7,c\n4,,\n5,9,e\n";
        let t = read_csv(csv.as_bytes(), "t", &schema(), "uid").unwrap();
        let expected = vec![
            vec![Value::Int(1), Value::Null, Value::Text("a".into())],
            vec![Value::Int(2), Value::Int(5), Value::Null],
            vec![Value::Int(3), Value::Int(7), Value::Text("c".into())],
            vec![Value::Int(4), Value::Null, Value::Null],
            vec![Value::Int(5), Value::Int(9), Value::Text("e".into())],
        ];
        assert_eq!(t.rows(), expected.as_slice());

        let bad = "uid,age,name\n,1,a\n";
        assert_eq!(
            read_csv(bad.as_bytes(), "t", &schema(), "uid").unwrap_err().code(),
            "EMPTY_UID"
        );
    }

    #[test]
    fn missing_uid_column() {
        let err = read_csv("uid,age,name\n".as_bytes(), "t", &schema(), "pid").unwrap_err();
        assert_eq!(err.code(), "MISSING_UID_COLUMN");
    }

    #[test]
    fn schema_sidecar_rules() {
        assert!(Schema::parse("a:integer\nb:text\n").is_err());
        assert!(Schema::parse("a:integer uid\nb:text uid\n").is_err());
        assert!(Schema::parse("a:integer uid\na:text\n").is_err());
        assert!(Schema::parse("a:blob uid\n").is_err());
        let s = schema();
        assert_eq!(Schema::parse(&s.to_sidecar()).unwrap(), s);
    }

    #[test]
    fn scan_uses_three_valued_logic() {
        let csv = "uid,age,name\n1,,a\n2,30,b\n3,31,c\n";
        let t = read_csv(csv.as_bytes(), "t", &schema(), "uid").unwrap();
        let all = scan(&t, |_| Some(true));
        assert_eq!(all.len(), 3);
        let not30 = scan(&t, |r| r[1].sql_cmp(&Value::Int(30)).map(|o| o.is_ne()));
        assert_eq!(not30.len(), 1);
        assert_eq!(not30[0][0], Value::Int(3));
    }

    #[test]
    fn distinct_uid_sets() {
        let csv = "uid,age,name\n1,1,a\n1,2,b\n2,3,c\n";
        let t = read_csv(csv.as_bytes(), "t", &schema(), "uid").unwrap();
        let uids = distinct_uids(t.rows(), 0);
        assert_eq!(uids, [Value::Int(1), Value::Int(2)].into_iter().collect());
        assert!(distinct_uids(std::iter::empty(), 0).is_empty());
    }

    #[test]
    fn config_redacts_salt() {
        let cfg = EngineConfig::new("s3cret").unwrap();
        assert!(!format!("{cfg:?}").contains("s3cret"));
        assert!(EngineConfig::new("").is_err());
    }
}
