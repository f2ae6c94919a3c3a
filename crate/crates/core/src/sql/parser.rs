use crate::error::{Error, Pos, Result};
use crate::sql::ast::*;
use crate::sql::functions;
use crate::sql::lexer::{tokenize, Tok, Token};

/// Parse one SELECT statement.
pub fn parse(sql: &str) -> Result<Query> {
    let tokens = tokenize(sql)?;
    if let Some(or) = tokens.iter().find(|t| t.is_word("or")) {
        return Err(Error::OrNotAllowed { pos: or.pos });
    }
    let mut p = Parser { tokens, at: 0 };
    let query = p.query()?;
    p.eat(&Tok::Semicolon);
    if p.peek().tok != Tok::Eof {
        return Err(p.unexpected("end of query"));
    }
    Ok(query)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.at + offset).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn pos(&self) -> Pos {
        self.peek().pos
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.peek().is_word(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<()> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn unexpected(&self, expected: &str) -> Error {
        let t = self.peek();
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            Tok::Word(w) | Tok::QuotedIdent(w) => format!("`{w}`"),
            Tok::Number(n) => format!("`{n}`"),
            Tok::Str(s) => format!("'{s}'"),
            other => format!("{other:?}"),
        };
        Error::syntax(t.pos, format!("expected {expected}, found {found}"))
    }

    fn identifier(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Word(w) if !is_reserved(w) => {
                let w = w.clone();
                self.next();
                Ok(w)
            }
            Tok::QuotedIdent(w) => {
                let w = w.clone();
                self.next();
                Ok(w)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn optional_alias(&mut self) -> Result<Option<String>> {
        if self.eat_word("as") {
            return self.identifier().map(Some);
        }
        match &self.peek().tok {
            Tok::Word(w) if !is_reserved(w) => self.identifier().map(Some),
            Tok::QuotedIdent(_) => self.identifier().map(Some),
            _ => Ok(None),
        }
    }

    fn query(&mut self) -> Result<Query> {
        self.expect_word("select")?;
        let distinct = self.eat_word("distinct");
        let mut select = vec![self.select_item()?];
        while self.eat(&Tok::Comma) {
            select.push(self.select_item()?);
        }
        self.expect_word("from")?;
        let from = self.parse_from()?;
        let where_ = if self.eat_word("where") {
            self.conditions()?
        } else {
            vec![]
        };
        let mut group_by = vec![];
        if self.eat_word("group") {
            self.expect_word("by")?;
            group_by.push(self.group_item()?);
            while self.eat(&Tok::Comma) {
                group_by.push(self.group_item()?);
            }
        }
        let having = if self.eat_word("having") {
            self.conditions()?
        } else {
            vec![]
        };
        let mut order_by = vec![];
        if self.eat_word("order") {
            self.expect_word("by")?;
            loop {
                let target = self.group_item()?;
                let descending = if self.eat_word("desc") {
                    true
                } else {
                    self.eat_word("asc");
                    false
                };
                order_by.push(OrderItem { target, descending });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_word("limit") {
            Some(self.unsigned()?)
        } else {
            None
        };
        let offset = if self.eat_word("offset") {
            Some(self.unsigned()?)
        } else {
            None
        };
        Ok(Query {
            distinct,
            select,
            from,
            where_,
            group_by,
            having,
            order_by,
            limit,
            offset,
        })
    }

    fn unsigned(&mut self) -> Result<u64> {
        match &self.peek().tok {
            Tok::Number(n) => {
                let v = n.parse::<u64>().map_err(|_| self.unexpected("non-negative integer"))?;
                self.next();
                Ok(v)
            }
            _ => Err(self.unexpected("non-negative integer")),
        }
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if self.eat(&Tok::Star) {
            return Ok(SelectItem::Wildcard);
        }
        if matches!(self.peek().tok, Tok::Word(_) | Tok::QuotedIdent(_))
            && self.peek_at(1).tok == Tok::Dot
            && self.peek_at(2).tok == Tok::Star
        {
            let table = self.identifier()?;
            self.next();
            self.next();
            return Ok(SelectItem::QualifiedWildcard(table));
        }
        let expr = self.expr()?;
        let alias = self.optional_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn group_item(&mut self) -> Result<GroupItem> {
        if let Tok::Number(n) = &self.peek().tok {
            if let Ok(p) = n.parse::<usize>() {
                let pos = self.pos();
                self.next();
                if p == 0 {
                    return Err(Error::syntax(pos, "positions start at 1"));
                }
                return Ok(GroupItem::Position(p));
            }
        }
        Ok(GroupItem::Expr(self.expr()?))
    }

    fn parse_from(&mut self) -> Result<FromItem> {
        let mut item = self.table_ref()?;
        loop {
            let kind = if self.eat(&Tok::Comma) {
                JoinKind::Cross
            } else if self.eat_word("cross") {
                self.expect_word("join")?;
                JoinKind::Cross
            } else if self.eat_word("join") {
                JoinKind::Inner
            } else if self.eat_word("inner") {
                self.expect_word("join")?;
                JoinKind::Inner
            } else if self.peek().is_word("left") || self.peek().is_word("right") {
                let left = self.next().is_word("left");
                self.eat_word("outer");
                self.expect_word("join")?;
                if left {
                    JoinKind::Left
                } else {
                    JoinKind::Right
                }
            } else {
                return Ok(item);
            };
            let right = self.table_ref()?;
            let on = if kind != JoinKind::Cross {
                self.expect_word("on")?;
                self.conditions()?
            } else {
                vec![]
            };
            item = FromItem::Join {
                kind,
                left: Box::new(item),
                right: Box::new(right),
                on,
            };
        }
    }

    fn table_ref(&mut self) -> Result<FromItem> {
        if self.eat(&Tok::LParen) {
            let query = self.query()?;
            self.expect(Tok::RParen, "`)`")?;
            let alias = self
                .optional_alias()?
                .ok_or_else(|| self.unexpected("subquery alias"))?;
            return Ok(FromItem::Subquery {
                query: Box::new(query),
                alias,
            });
        }
        let name = self.identifier()?;
        let alias = self.optional_alias()?;
        Ok(FromItem::Table { name, alias })
    }

    fn conditions(&mut self) -> Result<Vec<Condition>> {
        let mut conds = vec![self.condition()?];
        while self.eat_word("and") {
            conds.push(self.condition()?);
        }
        Ok(conds)
    }

    fn condition(&mut self) -> Result<Condition> {
        let pos = self.pos();
        let left = self.expr()?;
        let predicate = self.predicate()?;
        Ok(Condition { left, predicate, pos })
    }

    fn predicate(&mut self) -> Result<Predicate> {
        let op = match self.peek().tok {
            Tok::Eq => Some(CmpOp::Eq),
            Tok::NotEq => Some(CmpOp::NotEq),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::LtEq => Some(CmpOp::LtEq),
            Tok::Gt => Some(CmpOp::Gt),
            Tok::GtEq => Some(CmpOp::GtEq),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let right = self.expr()?;
            return Ok(Predicate::Compare { op, right });
        }
        if self.eat_word("is") {
            let negated = self.eat_word("not");
            self.expect_word("null")?;
            return Ok(Predicate::IsNull { negated });
        }
        let negated = self.eat_word("not");
        if self.eat_word("between") {
            let low = self.expr()?;
            self.expect_word("and")?;
            let high = self.expr()?;
            return Ok(Predicate::Between { negated, low, high });
        }
        if self.eat_word("in") {
            self.expect(Tok::LParen, "`(`")?;
            let mut list = vec![self.expr()?];
            while self.eat(&Tok::Comma) {
                list.push(self.expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Predicate::In { negated, list });
        }
        let case_insensitive = if self.eat_word("like") {
            false
        } else if self.eat_word("ilike") {
            true
        } else {
            return Err(self.unexpected("comparison operator"));
        };
        let pattern = self.string_literal("LIKE pattern")?;
        let escape = if self.eat_word("escape") {
            let pos = self.pos();
            let e = self.string_literal("escape character")?;
            let mut chars = e.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Some(c),
                _ => return Err(Error::syntax(pos, "ESCAPE takes a single character")),
            }
        } else {
            None
        };
        Ok(Predicate::Like {
            negated,
            case_insensitive,
            pattern,
            escape,
        })
    }

    fn string_literal(&mut self, what: &str) -> Result<String> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            self.next();
            let right = self.term()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut left = self.power()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(left),
            };
            self.next();
            let right = self.power()?;
            left = Expr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.eat(&Tok::Caret) {
            let exp = self.power()?;
            return Ok(Expr::Binary {
                op: BinOp::Pow,
                left: Box::new(base),
                right: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Literal(Literal::Int(i)) => Expr::Literal(Literal::Int(-i)),
                Expr::Literal(Literal::Real(r)) => Expr::Literal(Literal::Real(-r)),
                other => Expr::Neg(Box::new(other)),
            });
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        while self.eat(&Tok::DoubleColon) {
            let ty = self.cast_type()?;
            e = Expr::Cast {
                expr: Box::new(e),
                ty,
            };
        }
        Ok(e)
    }

    fn cast_type(&mut self) -> Result<CastType> {
        let pos = self.pos();
        let name = match &self.peek().tok {
            Tok::Word(w) => w.clone(),
            _ => return Err(self.unexpected("data type")),
        };
        self.next();
        CastType::parse(&name).ok_or_else(|| Error::syntax(pos, format!("unknown data type `{name}`")))
    }

    fn primary(&mut self) -> Result<Expr> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::Number(n) => {
                self.next();
                let lit = if n.contains(['.', 'e', 'E']) {
                    Literal::Real(n.parse().map_err(|_| Error::syntax(token.pos, "bad number"))?)
                } else {
                    Literal::Int(n.parse().map_err(|_| Error::syntax(token.pos, "integer out of range"))?)
                };
                Ok(Expr::Literal(lit))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Expr::Literal(Literal::Text(s.clone())))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Star => {
                self.next();
                Ok(Expr::Star)
            }
            Tok::QuotedIdent(_) => self.column_ref(),
            Tok::Word(w) => {
                let lower = w.to_ascii_lowercase();
                match lower.as_str() {
                    "null" => {
                        self.next();
                        return Ok(Expr::Literal(Literal::Null));
                    }
                    "true" | "false" => {
                        self.next();
                        return Ok(Expr::Literal(Literal::Bool(lower == "true")));
                    }
                    _ => {}
                }
                if self.peek_at(1).tok == Tok::LParen {
                    self.function_call()
                } else if is_reserved(w) {
                    Err(self.unexpected("expression"))
                } else {
                    self.column_ref()
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn column_ref(&mut self) -> Result<Expr> {
        let first = self.identifier()?;
        if self.peek().tok == Tok::Dot {
            self.next();
            let name = self.identifier()?;
            return Ok(Expr::Column {
                table: Some(first),
                name,
            });
        }
        Ok(Expr::Column {
            table: None,
            name: first,
        })
    }

    fn function_call(&mut self) -> Result<Expr> {
        let name_tok = self.next();
        let raw = match &name_tok.tok {
            Tok::Word(w) => w.clone(),
            _ => unreachable!("function_call called on a word"),
        };
        self.expect(Tok::LParen, "`(`")?;
        let name = functions::canonical_name(&raw);
        let e = match name.as_str() {
            "cast" => {
                let expr = self.expr()?;
                if !self.eat_word("as") {
                    self.expect(Tok::Comma, "AS or `,`")?;
                }
                let ty = self.cast_type()?;
                Expr::Cast {
                    expr: Box::new(expr),
                    ty,
                }
            }
            "substring" => {
                let expr = self.expr()?;
                let (mut from, mut len) = (None, None);
                if self.eat(&Tok::Comma) {
                    from = Some(Box::new(self.expr()?));
                    if self.eat(&Tok::Comma) {
                        len = Some(Box::new(self.expr()?));
                    }
                } else {
                    if self.eat_word("from") {
                        from = Some(Box::new(self.expr()?));
                    }
                    if self.eat_word("for") {
                        len = Some(Box::new(self.expr()?));
                    }
                }
                if from.is_none() && len.is_none() {
                    return Err(self.unexpected("FROM or FOR"));
                }
                Expr::Substring {
                    expr: Box::new(expr),
                    from,
                    len,
                }
            }
            "trim" => self.trim_body()?,
            "ltrim" | "rtrim" | "btrim" => {
                let side = match name.as_str() {
                    "ltrim" => TrimSide::Leading,
                    "rtrim" => TrimSide::Trailing,
                    _ => TrimSide::Both,
                };
                let expr = self.expr()?;
                let chars = if self.eat(&Tok::Comma) {
                    Some(Box::new(self.expr()?))
                } else {
                    None
                };
                Expr::Trim {
                    side,
                    chars,
                    expr: Box::new(expr),
                }
            }
            "extract" => {
                let pos = self.pos();
                let part_name = match &self.peek().tok {
                    Tok::Word(w) => w.clone(),
                    Tok::Str(s) => s.clone(),
                    _ => return Err(self.unexpected("date part")),
                };
                self.next();
                let part = DatePart::parse(&part_name)
                    .ok_or_else(|| Error::syntax(pos, format!("unknown date part `{part_name}`")))?;
                self.expect_word("from")?;
                let expr = self.expr()?;
                Expr::Extract {
                    part,
                    expr: Box::new(expr),
                }
            }
            _ => {
                let spec = functions::lookup(&name).ok_or_else(|| Error::UnknownFunction { name: raw.clone() })?;
                let distinct = self.eat_word("distinct");
                let mut args = Vec::new();
                if self.peek().tok != Tok::RParen {
                    args.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                }
                let ok_count = args.len() >= spec.min_args && spec.max_args.is_none_or(|m| args.len() <= m);
                if !ok_count {
                    let expected = match spec.max_args {
                        Some(m) if m == spec.min_args => m.to_string(),
                        Some(m) => format!("{}..{m}", spec.min_args),
                        None => format!("at least {}", spec.min_args),
                    };
                    return Err(Error::Arity {
                        name,
                        expected,
                        found: args.len(),
                    });
                }
                let is_agg = functions::is_aggregate(&name) || functions::is_noise_report(&name);
                if distinct && !is_agg {
                    return Err(Error::syntax(name_tok.pos, format!("DISTINCT is not allowed in `{name}`")));
                }
                let star_ok = matches!(name.as_str(), "count" | "count_noise");
                if args.contains(&Expr::Star) && (!star_ok || distinct) {
                    return Err(Error::syntax(name_tok.pos, format!("`*` is not allowed in `{name}`")));
                }
                Expr::Function { name, args, distinct }
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(e)
    }

    fn trim_body(&mut self) -> Result<Expr> {
        let side = if self.eat_word("leading") {
            Some(TrimSide::Leading)
        } else if self.eat_word("trailing") {
            Some(TrimSide::Trailing)
        } else if self.eat_word("both") {
            Some(TrimSide::Both)
        } else {
            None
        };
        if side.is_some() && self.eat_word("from") {
            let expr = self.expr()?;
            return Ok(Expr::Trim {
                side: side.unwrap_or(TrimSide::Both),
                chars: None,
                expr: Box::new(expr),
            });
        }
        let first = self.expr()?;
        if self.eat_word("from") {
            let expr = self.expr()?;
            return Ok(Expr::Trim {
                side: side.unwrap_or(TrimSide::Both),
                chars: Some(Box::new(first)),
                expr: Box::new(expr),
            });
        }
        if self.eat(&Tok::Comma) {
            let chars = self.expr()?;
            return Ok(Expr::Trim {
                side: side.unwrap_or(TrimSide::Both),
                chars: Some(Box::new(chars)),
                expr: Box::new(first),
            });
        }
        Ok(Expr::Trim {
            side: side.unwrap_or(TrimSide::Both),
            chars: None,
            expr: Box::new(first),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_aggregates(q: &Query) -> usize {
        let mut n = 0;
        for item in &q.select {
            if let SelectItem::Expr { expr, .. } = item {
                expr.walk(&mut |e| {
                    if let Expr::Function { name, .. } = e {
                        if functions::is_aggregate(name) {
                            n += 1;
                        }
                    }
                });
            }
        }
        n
    }

    #[test]
    fn running_example() {
        let q = parse("SELECT salary, count(*) FROM hrtable WHERE dept = 'CS' GROUP BY salary").unwrap();
        assert_eq!(q.where_.len(), 1);
        assert_eq!(count_aggregates(&q), 1);
        assert_eq!(q.group_by, vec![GroupItem::Expr(Expr::column("salary"))]);
    }

    #[test]
    fn or_is_rejected() {
        let err = parse("SELECT count(*) FROM table WHERE age = 30 OR age = 40").unwrap_err();
        assert_eq!(err.code(), "OR_NOT_ALLOWED");
        match err {
            Error::OrNotAllowed { pos } => assert_eq!(pos.column, 43),
            _ => unreachable!(),
        }
    }

    #[test]
    fn bare_select_has_no_aggregate() {
        let q = parse("SELECT age FROM table").unwrap();
        assert_eq!(count_aggregates(&q), 0);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("SELECT age\nFROM table WHERE age = = 3").unwrap_err();
        match err {
            Error::Syntax { pos, .. } => assert_eq!((pos.line, pos.column), (2, 24)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_function_and_arity() {
        assert_eq!(parse("SELECT frob(age) FROM t").unwrap_err().code(), "UNKNOWN_FUNCTION");
        assert_eq!(parse("SELECT left(age) FROM t").unwrap_err().code(), "BAD_ARITY");
        assert_eq!(parse("SELECT sum(*) FROM t").unwrap_err().code(), "SYNTAX_ERROR");
    }

    #[test]
    fn special_forms() {
        let q = parse(
            "SELECT count(*) FROM t WHERE substring(name FROM 0 FOR 4) = 'paul' \
             AND trim(LEADING 'x' FROM code) = 'a' AND extract(year FROM d) = 2016 \
             AND cast(age, text) = '3' AND age::real = 3.5",
        )
        .unwrap();
        assert_eq!(q.where_.len(), 5);
        assert!(matches!(q.where_[0].left, Expr::Substring { .. }));
        assert!(matches!(
            q.where_[1].left,
            Expr::Trim {
                side: TrimSide::Leading,
                ..
            }
        ));
        assert!(matches!(q.where_[2].left, Expr::Extract { part: DatePart::Year, .. }));
    }

    #[test]
    fn joins_parse() {
        let q = parse("SELECT count(*) FROM a JOIN b ON a.uid = b.uid").unwrap();
        assert!(matches!(q.from, FromItem::Join { kind: JoinKind::Inner, .. }));
        let q = parse("SELECT count(*) FROM a, b").unwrap();
        assert!(matches!(q.from, FromItem::Join { kind: JoinKind::Cross, .. }));
    }

    #[test]
    fn like_with_escape() {
        let q = parse(r"SELECT count(*) FROM t WHERE name NOT ILIKE 'a\%%' ESCAPE '\'").unwrap();
        assert_eq!(
            q.where_[0].predicate,
            Predicate::Like {
                negated: true,
                case_insensitive: true,
                pattern: r"a\%%".into(),
                escape: Some('\\'),
            }
        );
    }
}
