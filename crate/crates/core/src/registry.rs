//! Name-keyed registries for interchangeable strategies.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Anything that can be registered and looked up by a stable name.
pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    /// `kind` appears in lookup errors, e.g. "search backend".
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, entry: Box<T>) -> Result<()> {
        let name = entry.name();
        if self.entries.contains_key(name) {
            return Err(Error::invalid(
                format!("config.{}", self.kind.replace(' ', "_")),
                format!("`{name}` registered twice"),
            ));
        }
        self.entries.insert(name, entry);
        Ok(())
    }

    pub fn with(mut self, entry: Box<T>) -> Self {
        self.register(entry).expect("duplicate built-in strategy");
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .get(name)
            .map(|b| &**b)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_owned(),
                available: self.names().collect::<Vec<_>>().join(", "),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}
