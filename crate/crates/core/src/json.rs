//! Pretty JSON that stops indenting below a fixed nesting depth, so large
//! documents keep one leaf record per line.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

struct ShallowPretty {
    depth: usize,
    limit: usize,
    has_value: bool,
}

impl ShallowPretty {
    fn inline(&self) -> bool {
        self.depth > self.limit
    }

    fn newline<W: ?Sized + Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    fn open<W: ?Sized + Write>(&mut self, w: &mut W, bracket: &[u8]) -> io::Result<()> {
        self.depth += 1;
        self.has_value = false;
        w.write_all(bracket)
    }

    fn close<W: ?Sized + Write>(&mut self, w: &mut W, bracket: &[u8]) -> io::Result<()> {
        let inline = self.inline();
        self.depth -= 1;
        if self.has_value && !inline {
            self.newline(w)?;
        }
        self.has_value = true;
        w.write_all(bracket)
    }

    fn item<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(if self.inline() { b", " } else { b"," })?;
        }
        if !self.inline() {
            self.newline(w)?;
        }
        Ok(())
    }
}

impl Formatter for ShallowPretty {
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.open(w, b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.close(w, b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.item(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.open(w, b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.close(w, b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.item(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

/// Serializes `value` indented like `serde_json::to_string_pretty` down to
/// nesting depth `limit`; deeper containers are written on a single line.
/// The result ends with a newline.
pub fn to_string_shallow<T: Serialize + ?Sized>(value: &T, limit: usize) -> String {
    let mut buf = Vec::new();
    let formatter = ShallowPretty {
        depth: 0,
        limit,
        has_value: false,
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn matches_pretty_when_unlimited() {
        let v = json!({"a": [1, 2, {"b": []}], "c": {}, "d": [[1], {"e": "x"}]});
        assert_eq!(
            to_string_shallow(&v, usize::MAX),
            serde_json::to_string_pretty(&v).unwrap() + "\n"
        );
    }

    #[test]
    fn inlines_below_the_limit() {
        let v = json!({"items": [{"subset": ["a", "b"], "mass": 0.5}, {"subset": [], "mass": 0.5}]});
        let s = to_string_shallow(&v, 2);
        assert_eq!(
            s,
            "{\n  \"items\": [\n    {\"mass\": 0.5, \"subset\": [\"a\", \"b\"]},\n    {\"mass\": 0.5, \"subset\": []}\n  ]\n}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
