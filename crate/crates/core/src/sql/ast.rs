//! Query syntax tree. `Display` prints SQL that parses back to an equal tree.

use std::fmt;

use crate::error::Pos;
use crate::value::format_real;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub distinct: bool,
    pub select: Vec<SelectItem>,
    pub from: FromItem,
    pub where_: Vec<Condition>,
    pub group_by: Vec<GroupItem>,
    pub having: Vec<Condition>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Wildcard,
    QualifiedWildcard(String),
    Expr { expr: Expr, alias: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Cross,
    Inner,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromItem {
    Table {
        name: String,
        alias: Option<String>,
    },
    Subquery {
        query: Box<Query>,
        alias: String,
    },
    Join {
        kind: JoinKind,
        left: Box<FromItem>,
        right: Box<FromItem>,
        on: Vec<Condition>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupItem {
    Expr(Expr),
    Position(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub target: GroupItem,
    pub descending: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
            BinOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CastType {
    Integer,
    Real,
    Text,
    Boolean,
    Datetime,
    Date,
    Time,
}

impl CastType {
    pub fn parse(name: &str) -> Option<CastType> {
        Some(match name.to_ascii_lowercase().as_str() {
            "integer" | "int" => CastType::Integer,
            "real" | "float" | "double" => CastType::Real,
            "text" | "varchar" | "string" => CastType::Text,
            "boolean" | "bool" => CastType::Boolean,
            "datetime" | "timestamp" => CastType::Datetime,
            "date" => CastType::Date,
            "time" => CastType::Time,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CastType::Integer => "integer",
            CastType::Real => "real",
            CastType::Text => "text",
            CastType::Boolean => "boolean",
            CastType::Datetime => "datetime",
            CastType::Date => "date",
            CastType::Time => "time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatePart {
    Year,
    Quarter,
    Month,
    Day,
    Hour,
    Minute,
    Second,
}

impl DatePart {
    pub fn parse(name: &str) -> Option<DatePart> {
        Some(match name.to_ascii_lowercase().as_str() {
            "year" => DatePart::Year,
            "quarter" => DatePart::Quarter,
            "month" => DatePart::Month,
            "day" => DatePart::Day,
            "hour" => DatePart::Hour,
            "minute" => DatePart::Minute,
            "second" => DatePart::Second,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DatePart::Year => "year",
            DatePart::Quarter => "quarter",
            DatePart::Month => "month",
            DatePart::Day => "day",
            DatePart::Hour => "hour",
            DatePart::Minute => "minute",
            DatePart::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrimSide {
    Leading,
    Trailing,
    Both,
}

impl TrimSide {
    /// Function name used for seeding and printing.
    pub fn function_name(self) -> &'static str {
        match self {
            TrimSide::Leading => "ltrim",
            TrimSide::Trailing => "rtrim",
            TrimSide::Both => "btrim",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column {
        table: Option<String>,
        name: String,
    },
    Literal(Literal),
    /// The `*` in `count(*)`.
    Star,
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Cast {
        expr: Box<Expr>,
        ty: CastType,
    },
    Function {
        name: String,
        args: Vec<Expr>,
        distinct: bool,
    },
    Substring {
        expr: Box<Expr>,
        from: Option<Box<Expr>>,
        len: Option<Box<Expr>>,
    },
    Trim {
        side: TrimSide,
        chars: Option<Box<Expr>>,
        expr: Box<Expr>,
    },
    Extract {
        part: DatePart,
        expr: Box<Expr>,
    },
}

impl Expr {
    pub fn column(name: impl Into<String>) -> Expr {
        Expr::Column {
            table: None,
            name: name.into(),
        }
    }

    pub fn literal(&self) -> Option<&Literal> {
        match self {
            Expr::Literal(l) => Some(l),
            _ => None,
        }
    }

    /// Direct children, in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Column { .. } | Expr::Literal(_) | Expr::Star => vec![],
            Expr::Neg(e) | Expr::Cast { expr: e, .. } | Expr::Extract { expr: e, .. } => vec![e],
            Expr::Binary { left, right, .. } => vec![left, right],
            Expr::Function { args, .. } => args.iter().collect(),
            Expr::Substring { expr, from, len } => {
                let mut v = vec![expr.as_ref()];
                v.extend(from.as_deref());
                v.extend(len.as_deref());
                v
            }
            Expr::Trim { chars, expr, .. } => {
                let mut v = vec![expr.as_ref()];
                v.extend(chars.as_deref());
                v
            }
        }
    }

    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        for child in self.children() {
            child.walk(visit);
        }
    }

    /// Rebuild the tree bottom-up, replacing nodes for which `f` returns `Some`.
    pub fn transform(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(replaced) = f(self) {
            return replaced;
        }
        let mut t = |e: &Expr| Box::new(e.transform(f));
        match self {
            Expr::Column { .. } | Expr::Literal(_) | Expr::Star => self.clone(),
            Expr::Neg(e) => Expr::Neg(t(e)),
            Expr::Binary { op, left, right } => Expr::Binary {
                op: *op,
                left: t(left),
                right: t(right),
            },
            Expr::Cast { expr, ty } => Expr::Cast { expr: t(expr), ty: *ty },
            Expr::Function { name, args, distinct } => Expr::Function {
                name: name.clone(),
                args: args.iter().map(|a| *t(a)).collect(),
                distinct: *distinct,
            },
            Expr::Substring { expr, from, len } => Expr::Substring {
                expr: t(expr),
                from: from.as_deref().map(&mut t),
                len: len.as_deref().map(&mut t),
            },
            Expr::Trim { side, chars, expr } => Expr::Trim {
                side: *side,
                chars: chars.as_deref().map(&mut t),
                expr: t(expr),
            },
            Expr::Extract { part, expr } => Expr::Extract {
                part: *part,
                expr: t(expr),
            },
        }
    }

    pub fn contains_column(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Column { .. }));
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::NotEq => "<>",
            CmpOp::Lt => "<",
            CmpOp::LtEq => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtEq => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Compare { op: CmpOp, right: Expr },
    Between { negated: bool, low: Expr, high: Expr },
    In { negated: bool, list: Vec<Expr> },
    Like {
        negated: bool,
        case_insensitive: bool,
        pattern: String,
        escape: Option<char>,
    },
    IsNull { negated: bool },
}

#[derive(Debug, Clone)]
pub struct Condition {
    pub left: Expr,
    pub predicate: Predicate,
    pub pos: Pos,
}

/// Positions are diagnostics only and do not take part in equality.
impl PartialEq for Condition {
    fn eq(&self, other: &Condition) -> bool {
        self.left == other.left && self.predicate == other.predicate
    }
}

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "offset", "and", "or", "not", "in",
    "like", "ilike", "between", "is", "null", "as", "distinct", "asc", "desc", "join", "inner", "left", "right",
    "outer", "cross", "on", "escape", "true", "false",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

struct Ident<'a>(&'a str);

impl fmt::Display for Ident<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let plain = !self.0.is_empty()
            && self.0.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && self.0.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !is_reserved(self.0);
        if plain {
            f.write_str(self.0)
        } else {
            write!(f, "\"{}\"", self.0.replace('"', "\"\""))
        }
    }
}

pub(crate) fn quote_text(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("NULL"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(r) => {
                let text = format_real(*r);
                if text.contains(['.', 'e', 'E']) || !r.is_finite() {
                    f.write_str(&text)
                } else {
                    write!(f, "{text}.0")
                }
            }
            Literal::Text(s) => f.write_str(&quote_text(s)),
            Literal::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column { table: Some(t), name } => write!(f, "{}.{}", Ident(t), Ident(name)),
            Expr::Column { table: None, name } => write!(f, "{}", Ident(name)),
            Expr::Literal(l) => write!(f, "{l}"),
            Expr::Star => f.write_str("*"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary { op, left, right } => write!(f, "({left} {} {right})", op.symbol()),
            Expr::Cast { expr, ty } => write!(f, "cast({expr} AS {})", ty.name()),
            Expr::Function { name, args, distinct } => {
                write!(f, "{name}(")?;
                if *distinct {
                    f.write_str("DISTINCT ")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Substring { expr, from, len } => {
                write!(f, "substring({expr}")?;
                if let Some(from) = from {
                    write!(f, " FROM {from}")?;
                }
                if let Some(len) = len {
                    write!(f, " FOR {len}")?;
                }
                f.write_str(")")
            }
            Expr::Trim { side, chars, expr } => {
                let side = match side {
                    TrimSide::Leading => "LEADING",
                    TrimSide::Trailing => "TRAILING",
                    TrimSide::Both => "BOTH",
                };
                match chars {
                    Some(c) => write!(f, "trim({side} {c} FROM {expr})"),
                    None => write!(f, "trim({side} FROM {expr})"),
                }
            }
            Expr::Extract { part, expr } => write!(f, "extract({} FROM {expr})", part.name()),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let not = |n: bool| if n { "NOT " } else { "" };
        match self {
            Predicate::Compare { op, right } => write!(f, "{} {right}", op.symbol()),
            Predicate::Between { negated, low, high } => write!(f, "{}BETWEEN {low} AND {high}", not(*negated)),
            Predicate::In { negated, list } => {
                write!(f, "{}IN (", not(*negated))?;
                for (i, e) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Predicate::Like {
                negated,
                case_insensitive,
                pattern,
                escape,
            } => {
                let op = if *case_insensitive { "ILIKE" } else { "LIKE" };
                write!(f, "{}{op} {}", not(*negated), quote_text(pattern))?;
                if let Some(c) = escape {
                    write!(f, " ESCAPE {}", quote_text(&c.to_string()))?;
                }
                Ok(())
            }
            Predicate::IsNull { negated } => write!(f, "IS {}NULL", not(*negated)),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.left, self.predicate)
    }
}

impl fmt::Display for GroupItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupItem::Expr(e) => write!(f, "{e}"),
            GroupItem::Position(p) => write!(f, "{p}"),
        }
    }
}

impl fmt::Display for FromItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FromItem::Table { name, alias } => {
                write!(f, "{}", Ident(name))?;
                if let Some(a) = alias {
                    write!(f, " AS {}", Ident(a))?;
                }
                Ok(())
            }
            FromItem::Subquery { query, alias } => write!(f, "({query}) AS {}", Ident(alias)),
            FromItem::Join { kind, left, right, on } => {
                let kw = match kind {
                    JoinKind::Cross => "CROSS JOIN",
                    JoinKind::Inner => "JOIN",
                    JoinKind::Left => "LEFT JOIN",
                    JoinKind::Right => "RIGHT JOIN",
                };
                write!(f, "{left} {kw} {right}")?;
                write_conditions(f, " ON ", on)
            }
        }
    }
}

fn write_conditions(f: &mut fmt::Formatter<'_>, keyword: &str, conds: &[Condition]) -> fmt::Result {
    for (i, c) in conds.iter().enumerate() {
        f.write_str(if i == 0 { keyword } else { " AND " })?;
        write!(f, "{c}")?;
    }
    Ok(())
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Wildcard => f.write_str("*"),
            SelectItem::QualifiedWildcard(t) => write!(f, "{}.*", Ident(t)),
            SelectItem::Expr { expr, alias: None } => write!(f, "{expr}"),
            SelectItem::Expr { expr, alias: Some(a) } => write!(f, "{expr} AS {}", Ident(a)),
        }
    }
}

impl fmt::Display for OrderItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.target, if self.descending { " DESC" } else { " ASC" })
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        write_list(f, &self.select)?;
        write!(f, " FROM {}", self.from)?;
        write_conditions(f, " WHERE ", &self.where_)?;
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            write_list(f, &self.group_by)?;
        }
        write_conditions(f, " HAVING ", &self.having)?;
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            write_list(f, &self.order_by)?;
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        if let Some(o) = self.offset {
            write!(f, " OFFSET {o}")?;
        }
        Ok(())
    }
}
