use std::fmt;

/// Byte range in the source plus the 1-based position of its start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            end: other.end.max(self.end),
            ..self
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Source spans laid out in the same shape as the term they describe.
///
/// Children follow source order:
/// `val e` → [e]; `e1#op(e2; y. c)` → [e1, e2, c]; `with e handle c` → [e, c];
/// `if e then c1 else c2` → [e, c1, c2]; `absurd e` → [e]; `e1 e2` → [e1, e2];
/// `match e with {..}` → [e, c1, c2]; `let`/`let rec` → [c1, c2];
/// `succ e` → [e]; `fun x. c` → [c];
/// handlers → [c_v, e_1, c_1, e_2, c_2, ...] (case instance, case body).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpanTree {
    pub span: SourceSpan,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    pub fn leaf(span: SourceSpan) -> Self {
        SpanTree {
            span,
            children: Vec::new(),
        }
    }

    pub fn node(span: SourceSpan, children: Vec<SpanTree>) -> Self {
        SpanTree { span, children }
    }

    /// Span of the node reached by `path`, stopping at the deepest node that
    /// exists.
    pub fn locate(&self, path: &[usize]) -> SourceSpan {
        let mut node = self;
        for &i in path {
            match node.children.get(i) {
                Some(child) => node = child,
                None => break,
            }
        }
        node.span
    }
}
