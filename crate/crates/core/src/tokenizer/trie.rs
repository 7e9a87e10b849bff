use std::collections::HashMap;

#[derive(Debug, Clone, Default)]
struct Node {
    children: HashMap<char, usize>,
    id: Option<u32>,
}

/// Character trie over piece surfaces for prefix enumeration.
#[derive(Debug, Clone)]
pub(crate) struct PieceTrie {
    nodes: Vec<Node>,
}

impl Default for PieceTrie {
    fn default() -> Self {
        PieceTrie {
            nodes: vec![Node::default()],
        }
    }
}

impl PieceTrie {
    pub fn insert(&mut self, surface: &str, id: u32) {
        let mut cur = 0;
        for c in surface.chars() {
            cur = match self.nodes[cur].children.get(&c) {
                Some(&next) => next,
                None => {
                    self.nodes.push(Node::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[cur].children.insert(c, next);
                    next
                }
            };
        }
        self.nodes[cur].id = Some(id);
    }

    /// `(length, id)` for every piece that is a prefix of `text`.
    pub fn prefixes<'a>(&'a self, text: &'a [char]) -> impl Iterator<Item = (usize, u32)> + 'a {
        let mut cur = Some(0usize);
        text.iter()
            .enumerate()
            .map_while(move |(i, c)| {
                let next = *self.nodes[cur?].children.get(c)?;
                cur = Some(next);
                Some(self.nodes[next].id.map(|id| (i + 1, id)))
            })
            .flatten()
    }

    #[allow(dead_code)]
    pub fn get(&self, text: &[char]) -> Option<u32> {
        let mut cur = 0;
        for c in text {
            cur = *self.nodes[cur].children.get(c)?;
        }
        self.nodes[cur].id
    }
}
