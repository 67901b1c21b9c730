//! Uncompressed binary trie keyed by address bits, most significant first.
//!
//! Nodes live in one arena and refer to each other by index, so a built trie
//! is a pair of flat vectors. A lookup touches at most `BITS + 1` nodes.

const NONE: u32 = u32::MAX;

pub(crate) trait AddressBits: Copy {
    const BITS: u8;

    /// Bit `i` counted from the most significant end.
    fn bit(self, i: u8) -> usize;
}

impl AddressBits for u32 {
    const BITS: u8 = 32;

    #[inline]
    fn bit(self, i: u8) -> usize {
        ((self >> (31 - i)) & 1) as usize
    }
}

impl AddressBits for u128 {
    const BITS: u8 = 128;

    #[inline]
    fn bit(self, i: u8) -> usize {
        ((self >> (127 - i)) & 1) as usize
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    child: [u32; 2],
    value: u32,
}

impl Node {
    const EMPTY: Node = Node { child: [NONE, NONE], value: NONE };
}

#[derive(Debug, Clone)]
pub(crate) struct BitTrie<K> {
    nodes: Vec<Node>,
    len: usize,
    _key: std::marker::PhantomData<K>,
}

impl<K: AddressBits> Default for BitTrie<K> {
    fn default() -> Self {
        BitTrie { nodes: vec![Node::EMPTY], len: 0, _key: std::marker::PhantomData }
    }
}

impl<K: AddressBits> BitTrie<K> {
    /// Returns the value stored at exactly `key/prefix_len`, storing `value`
    /// there first if the slot was empty. The flag is true on insertion.
    /// `key` must already be masked to `prefix_len`.
    pub(crate) fn get_or_insert(&mut self, key: K, prefix_len: u8, value: u32) -> (u32, bool) {
        debug_assert!(prefix_len <= K::BITS);
        debug_assert!(value != NONE);
        let mut at = 0usize;
        for i in 0..prefix_len {
            let b = key.bit(i);
            let next = self.nodes[at].child[b];
            at = if next == NONE {
                let idx = self.nodes.len() as u32;
                self.nodes.push(Node::EMPTY);
                self.nodes[at].child[b] = idx;
                idx as usize
            } else {
                next as usize
            };
        }
        let slot = &mut self.nodes[at].value;
        if *slot == NONE {
            *slot = value;
            self.len += 1;
            (value, true)
        } else {
            (*slot, false)
        }
    }

    /// Value of the longest stored prefix covering `key`.
    pub(crate) fn longest_match(&self, key: K) -> Option<u32> {
        let mut best = self.nodes[0].value;
        let mut at = 0usize;
        for i in 0..K::BITS {
            let next = self.nodes[at].child[key.bit(i)];
            if next == NONE {
                break;
            }
            at = next as usize;
            let value = self.nodes[at].value;
            if value != NONE {
                best = value;
            }
        }
        (best != NONE).then_some(best)
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }
}
