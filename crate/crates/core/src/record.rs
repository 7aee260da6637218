//! A generic named-field message, used by trace files and tests.

use std::fmt;
use std::sync::Arc;

use crate::model::{Message, SlotDescriptor, Tag, Value};

#[derive(Clone, PartialEq)]
pub struct Record {
    pub tag: Tag,
    pub fields: Vec<(Arc<str>, Value)>,
}

impl Record {
    pub fn new(tag: Tag) -> Self {
        Self {
            tag,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.fields.push((name.into(), value.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, v)| v)
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        self.get(name).and_then(Value::as_int)
    }
}

impl fmt::Debug for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.tag)?;
        for (i, (n, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}={v:?}")?;
        }
        f.write_str(")")
    }
}

impl Message for Record {
    fn tag(&self) -> Tag {
        self.tag
    }
}

/// A slot for `tag` binding each `(field, variable)` pair; missing fields bind `Unit`.
pub fn field_slot(tag: Tag, bindings: &[(&'static str, &'static str)]) -> SlotDescriptor<Record> {
    let fields: Vec<&'static str> = bindings.iter().map(|(f, _)| *f).collect();
    let names: Vec<&'static str> = bindings.iter().map(|(_, n)| *n).collect();
    SlotDescriptor::new(tag).bind(&names, move |r: &Record, out| {
        for f in &fields {
            out.push(r.get(f).cloned().unwrap_or(Value::Unit));
        }
    })
}
