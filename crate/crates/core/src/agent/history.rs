//! Short-term memory of a session.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const DEFAULT_CAPACITY: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub query: String,
    pub answer: String,
}

/// The last `capacity` question/answer pairs, oldest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionHistory {
    turns: VecDeque<Turn>,
    capacity: usize,
}

impl Default for SessionHistory {
    fn default() -> SessionHistory {
        SessionHistory::new(DEFAULT_CAPACITY)
    }
}

impl SessionHistory {
    pub fn new(capacity: usize) -> SessionHistory {
        SessionHistory {
            turns: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter()
    }

    /// Adds a turn, dropping the oldest ones beyond capacity.
    pub fn append(&mut self, query: &str, answer: &str) {
        if self.capacity == 0 {
            return;
        }
        while self.turns.len() >= self.capacity {
            self.turns.pop_front();
        }
        self.turns.push_back(Turn {
            query: query.to_string(),
            answer: answer.to_string(),
        });
    }

    /// Newest last, so the latest turn sits next to the current query.
    pub fn render(&self) -> String {
        self.turns
            .iter()
            .map(|t| format!("User: {}\nAnswer: {}", t.query.trim(), t.answer.trim()))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evicts_oldest() {
        let mut h = SessionHistory::new(3);
        assert!(h.is_empty());
        h.append("q0", "a0");
        assert_eq!(h.len(), 1);
        for i in 1..4 {
            h.append(&format!("q{i}"), &format!("a{i}"));
        }
        assert_eq!(h.len(), 3);
        let qs: Vec<&str> = h.turns().map(|t| t.query.as_str()).collect();
        assert_eq!(qs, ["q1", "q2", "q3"]);
        assert!(h.render().ends_with("User: q3\nAnswer: a3"));
    }

    #[test]
    fn zero_capacity_keeps_nothing() {
        let mut h = SessionHistory::new(0);
        h.append("q", "a");
        assert!(h.is_empty());
        assert_eq!(h.render(), "");
    }
}
