use super::{LangError, Pos};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Int(i64),
    Ident(String),
    /// Double-quoted name, accepted wherever an enum value name is.
    Quoted(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest symbols first so that prefixes never shadow them.
const SYMBOLS: &[&str] = &[
    "-->", "..", "->", "<-", "<=", ">=", "!=", "/\\", "\\/", "(", ")", "{", "}", "[", "]", ",", ":", ".", "+", "-",
    "*", "/", "%", "|", "=", "<", ">", "!", "_",
];

pub fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        }
        if c == '$' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<i64>()
                .map_err(|_| LangError::syntax(pos, format!("integer literal {text} out of range")))?;
            out.push(Token { tok: Tok::Int(n), pos });
            continue;
        }
        if c.is_alphabetic() || (c == '_' && chars.get(i + 1).is_some_and(|d| d.is_alphanumeric() || *d == '_')) {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != '"' {
                return Err(LangError::syntax(pos, "unterminated quoted name"));
            }
            let name: String = chars[start..j].iter().collect();
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n, &chars);
            out.push(Token { tok: Tok::Quoted(name), pos });
            continue;
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.chars().count(), &chars);
                out.push(Token { tok: Tok::Sym(s), pos });
            }
            None => return Err(LangError::syntax(pos, format!("unexpected character '{c}'"))),
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_ranges() {
        assert_eq!(
            toks("a --> b -> c..d <- e"),
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("-->"),
                Tok::Ident("b".into()),
                Tok::Sym("->"),
                Tok::Ident("c".into()),
                Tok::Sym(".."),
                Tok::Ident("d".into()),
                Tok::Sym("<-"),
                Tok::Ident("e".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let ts = lex("$ comment\n  x /\\ y").unwrap();
        assert_eq!(ts[0].pos, Pos { line: 2, col: 3 });
        assert_eq!(ts[1].tok, Tok::Sym("/\\"));
    }

    #[test]
    fn wildcard_and_quoted() {
        assert_eq!(toks("_ \"a b\""), vec![Tok::Sym("_"), Tok::Quoted("a b".into()), Tok::Eof]);
        assert!(lex("#").is_err());
    }
}
