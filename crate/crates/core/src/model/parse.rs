//! Text form of calculation trees.
//!
//! ```text
//! node   := leaf | op params? size? '(' node (',' node)* ')'
//! leaf   := 'x' INT size? | 'leaf' '(' 'x' INT size? ')'
//! op     := sum | max | min | kofn | lt | gt
//! params := '[' key '=' number (',' key '=' number)* ']'
//! size   := '@' INT
//! ```
//!
//! `kofn` takes `k` and `t`; `lt` and `gt` take `t`. Numbers accept `inf`
//! and `-inf`. Inputs are numbered from 1 in text and from 0 in the API.

use super::tree::{NodeKind, TreeSpec};
use crate::error::{Error, Result};

pub fn parse_tree(text: &str) -> Result<TreeSpec> {
    let mut p = Parser { src: text, pos: 0 };
    let spec = p.node()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err("trailing characters"));
    }
    Ok(spec)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        let s = &self.rest()[..len];
        self.pos += len;
        Ok(s)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+')))
            .unwrap_or(self.rest().len());
        let tok = &self.rest()[..len];
        let v = match tok {
            "inf" | "+inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            _ => tok
                .parse::<f64>()
                .map_err(|_| self.err(format!("bad number `{tok}`")))?,
        };
        self.pos += len;
        Ok(v)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        let tok = &self.rest()[..len];
        let v = tok
            .parse::<usize>()
            .map_err(|_| self.err(format!("bad integer `{tok}`")))?;
        self.pos += len;
        Ok(v)
    }

    fn size(&mut self) -> Result<Option<usize>> {
        if self.eat('@') {
            Ok(Some(self.integer()?))
        } else {
            Ok(None)
        }
    }

    fn leaf_index(&mut self, name: &str) -> Result<usize> {
        let idx: usize = name[1..]
            .parse()
            .map_err(|_| self.err(format!("bad input name `{name}`")))?;
        if idx == 0 {
            return Err(self.err("inputs are numbered from x1"));
        }
        Ok(idx - 1)
    }

    fn params(&mut self) -> Result<Vec<(&'a str, f64)>> {
        let mut out = Vec::new();
        if !self.eat('[') {
            return Ok(out);
        }
        loop {
            let key = self.ident()?;
            self.expect('=')?;
            out.push((key, self.number()?));
            if self.eat(']') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn node(&mut self) -> Result<TreeSpec> {
        let start = self.pos;
        let name = self.ident()?;
        if name.starts_with('x') && name.len() > 1 && name[1..].bytes().all(|b| b.is_ascii_digit())
        {
            let input = self.leaf_index(name)?;
            let mut spec = TreeSpec::leaf(input);
            spec.size = self.size()?;
            return Ok(spec);
        }
        if name == "leaf" {
            self.expect('(')?;
            let inner = self.ident()?;
            let input = self.leaf_index(inner)?;
            let mut spec = TreeSpec::leaf(input);
            spec.size = self.size()?;
            self.expect(')')?;
            return Ok(spec);
        }
        let params = self.params()?;
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let unknown = |allowed: &[&str]| {
            params
                .iter()
                .find(|(k, _)| !allowed.contains(k))
                .map(|(k, _)| format!("unknown parameter `{k}` for `{name}`"))
        };
        let kind = match name {
            "sum" | "max" | "min" => {
                if let Some(msg) = unknown(&[]) {
                    return Err(self.err(msg));
                }
                match name {
                    "sum" => NodeKind::Sum,
                    "max" => NodeKind::Max,
                    _ => NodeKind::Min,
                }
            }
            "kofn" => {
                if let Some(msg) = unknown(&["k", "t"]) {
                    return Err(self.err(msg));
                }
                let k = get("k").ok_or_else(|| self.err("kofn needs k"))?;
                if k < 0.0 || k.fract() != 0.0 {
                    return Err(self.err("kofn k must be a non-negative integer"));
                }
                NodeKind::KOfN {
                    k: k as usize,
                    t: get("t").ok_or_else(|| self.err("kofn needs t"))?,
                }
            }
            "lt" | "gt" => {
                if let Some(msg) = unknown(&["t"]) {
                    return Err(self.err(msg));
                }
                let t = get("t").ok_or_else(|| self.err(format!("{name} needs t")))?;
                if name == "lt" {
                    NodeKind::IndicatorLess { t }
                } else {
                    NodeKind::IndicatorGreater { t }
                }
            }
            other => {
                self.pos = start;
                return Err(self.err(format!("unknown node `{other}`")));
            }
        };
        let size = self.size()?;
        self.expect('(')?;
        let mut children = vec![self.node()?];
        while self.eat(',') {
            children.push(self.node()?);
        }
        self.expect(')')?;
        Ok(TreeSpec {
            kind,
            children,
            size,
        })
    }
}
