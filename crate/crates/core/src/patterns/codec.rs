//! Text form of a TEC: `T(P(p(t,p),...),V(v(t,p),...))`.
//!
//! Whitespace is ignored on input. Output lists points and vectors sorted,
//! without spaces.

use super::{Point, Tec, Vector};
use crate::error::{Error, Result};

pub fn encode_tec(tec: &Tec) -> String {
    let mut pattern = tec.pattern.clone();
    pattern.sort_unstable();
    pattern.dedup();
    let mut vs = tec.translators.clone();
    vs.sort_unstable();
    vs.dedup();
    let ps: Vec<String> = pattern.iter().map(Point::to_string).collect();
    let vs: Vec<String> = vs.iter().map(Vector::to_string).collect();
    format!("T(P({}),V({}))", ps.join(","), vs.join(","))
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.len(), |c| c.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::TecParse {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => self.err(format!("expected '{want}', found '{c}'")),
            None => self.err(format!("expected '{want}', found end of input")),
        }
    }

    fn int(&mut self) -> Result<i64> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().map(|c| c.1).collect();
        text.parse().or_else(|_| {
            self.pos = start;
            self.err(format!("expected integer, found {text:?}"))
        })
    }

    fn pair(&mut self, tag: char) -> Result<(i64, i64)> {
        self.expect(tag)?;
        self.expect('(')?;
        let a = self.int()?;
        self.expect(',')?;
        let b = self.int()?;
        self.expect(')')?;
        Ok((a, b))
    }

    fn list<T>(&mut self, tag: char, item: impl Fn(&mut Self) -> Result<T>) -> Result<Vec<(usize, T)>> {
        self.expect(tag)?;
        self.expect('(')?;
        let mut out = Vec::new();
        loop {
            let at = self.offset();
            out.push((at, item(self)?));
            if self.peek() == Some(',') {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect(')')?;
        Ok(out)
    }
}

pub fn decode_tec(text: &str) -> Result<Tec> {
    let mut p = Parser {
        chars: text.char_indices().filter(|(_, c)| !c.is_whitespace()).collect(),
        pos: 0,
        src: text,
    };
    p.expect('T')?;
    p.expect('(')?;
    let points = p.list('P', |p| p.pair('p').map(|(t, q)| Point::new(t, q)))?;
    p.expect(',')?;
    let vectors = p.list('V', |p| p.pair('v').map(|(t, q)| Vector::new(t, q)))?;
    p.expect(')')?;
    if p.peek().is_some() {
        return p.err("trailing input after TEC");
    }
    if let Some((at, _)) = vectors.iter().find(|(_, v)| *v < Vector::ZERO) {
        return Err(Error::TecParse {
            offset: *at,
            message: "translator precedes the identity; the pattern must be its earliest occurrence".into(),
        });
    }
    let mut translators: Vec<Vector> = vectors.into_iter().map(|(_, v)| v).collect();
    translators.sort_unstable();
    translators.dedup();
    if translators.first() != Some(&Vector::ZERO) {
        return Err(Error::TecParse {
            offset: text.len(),
            message: "identity translator v(0,0) is missing".into(),
        });
    }
    let mut pattern: Vec<Point> = points.into_iter().map(|(_, q)| q).collect();
    pattern.sort_unstable();
    pattern.dedup();
    Ok(Tec { pattern, translators })
}
