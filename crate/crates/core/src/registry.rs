//! Name-keyed registries of interchangeable strategies.

use crate::error::{Error, Result};

/// Strategies that can be registered under a name.
pub trait Named {
    fn name(&self) -> &'static str;
}

/// Ordered name -> trait object table. Lookup failures list the available names.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: Vec::new() }
    }

    /// Adds a strategy, replacing any previous entry with the same name.
    pub fn register(&mut self, strategy: Box<T>) -> &mut Self {
        let name = strategy.name();
        self.entries.retain(|e| e.name() != name);
        self.entries.push(strategy);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Named {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Named for Hello {
        fn name(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    struct Loud;
    impl Named for Loud {
        fn name(&self) -> &'static str {
            "hello"
        }
    }
    impl Greeter for Loud {
        fn greet(&self) -> String {
            "HELLO".into()
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut r: Registry<dyn Greeter> = Registry::new("greeter");
        r.register(Box::new(Hello));
        assert_eq!(r.get("hello").unwrap().greet(), "hello");
        r.register(Box::new(Loud));
        assert_eq!(r.names(), vec!["hello"]);
        assert_eq!(r.get("hello").unwrap().greet(), "HELLO");
        match r.get("bye") {
            Err(Error::UnknownStrategy { kind, available, .. }) => {
                assert_eq!(kind, "greeter");
                assert_eq!(available, "hello");
            }
            _ => panic!("expected unknown strategy"),
        }
    }
}
