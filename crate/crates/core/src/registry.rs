//! Name-keyed factories for interchangeable strategies.

use std::collections::BTreeMap;

use crate::{Error, Result};

type Factory<T, A> = Box<dyn Fn(&A) -> Box<T> + Send + Sync>;

/// Maps strategy names to constructors taking a shared argument type `A`.
pub struct Registry<T: ?Sized, A> {
    kind: &'static str,
    entries: BTreeMap<String, Factory<T, A>>,
}

impl<T: ?Sized, A> Registry<T, A> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F) -> &mut Self
    where
        F: Fn(&A) -> Box<T> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Box::new(factory));
        self
    }

    pub fn create(&self, name: &str, arg: &A) -> Result<Box<T>> {
        self.entries
            .get(name)
            .map(|f| f(arg))
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Plain(String);

    impl Greeter for Plain {
        fn greet(&self) -> String {
            format!("hello {}", self.0)
        }
    }

    #[test]
    fn creates_registered_and_rejects_unknown() {
        let mut reg: Registry<dyn Greeter, String> = Registry::new("greeter");
        reg.register("plain", |who: &String| Box::new(Plain(who.clone())));
        assert_eq!(reg.create("plain", &"bob".into()).unwrap().greet(), "hello bob");
        let err = reg.create("fancy", &String::new()).err().unwrap();
        assert!(err.to_string().contains("unknown greeter strategy 'fancy'"));
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["plain"]);
    }
}
