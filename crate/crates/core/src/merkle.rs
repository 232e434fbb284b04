//! Append-only Merkle tree over canonical transaction bytes.
//!
//! Hashing follows RFC 6962: leaves are `SHA-256(0x00 || leaf)`, interior
//! nodes `SHA-256(0x01 || left || right)`, and a tree of `n` leaves splits at
//! the largest power of two strictly below `n`, so unpaired nodes are
//! promoted rather than duplicated.
//!
//! Every complete, aligned subtree hash is cached level by level. The root,
//! audit paths and consistency proofs for any prefix of the tree are then
//! assembled from O(log n) cached nodes.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub const LEAF_PREFIX: u8 = 0x00;
pub const NODE_PREFIX: u8 = 0x01;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MerkleError {
    #[error("index {index} out of range for tree of size {size}")]
    IndexOutOfRange { index: u64, size: u64 },
}

/// A 32-byte SHA-256 value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

/// Root of a tree; same representation as any other node.
pub type RootHash = Digest;

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        let bytes = hex::decode(s).ok()?;
        Some(Digest(bytes.try_into().ok()?))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).ok_or_else(|| serde::de::Error::custom("expected 64 hex characters"))
    }
}

pub fn empty_root() -> RootHash {
    Digest(Sha256::digest([]).into())
}

pub fn leaf_hash(leaf: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update([LEAF_PREFIX]);
    h.update(leaf);
    Digest(h.finalize().into())
}

pub fn node_hash(left: &Digest, right: &Digest) -> Digest {
    let mut h = Sha256::new();
    h.update([NODE_PREFIX]);
    h.update(left.0);
    h.update(right.0);
    Digest(h.finalize().into())
}

/// Largest power of two strictly less than `n` (`n >= 2`).
fn split_point(n: u64) -> u64 {
    debug_assert!(n >= 2);
    1 << (63 - (n - 1).leading_zeros())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditPath {
    pub leaf_index: u64,
    pub sibling_hashes: Vec<Digest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyProof {
    pub old_size: u64,
    pub new_size: u64,
    pub hashes: Vec<Digest>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MerkleTree {
    // levels[k][i] is the hash of leaves [i * 2^k, (i + 1) * 2^k).
    levels: Vec<Vec<Digest>>,
}

impl MerkleTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_leaves<I, B>(leaves: I) -> Self
    where
        I: IntoIterator<Item = B>,
        B: AsRef<[u8]>,
    {
        let mut tree = Self::new();
        for leaf in leaves {
            tree.push_leaf_hash(leaf_hash(leaf.as_ref()));
        }
        tree
    }

    pub fn leaf_count(&self) -> u64 {
        self.levels.first().map_or(0, |l| l.len() as u64)
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_count() == 0
    }

    pub fn append(&mut self, leaf: &[u8]) -> RootHash {
        self.push_leaf_hash(leaf_hash(leaf));
        self.root()
    }

    /// Appends an already computed leaf hash without recomputing the root.
    pub fn push_leaf_hash(&mut self, hash: Digest) {
        if self.levels.is_empty() {
            self.levels.push(Vec::new());
        }
        self.levels[0].push(hash);
        let mut level = 0;
        while self.levels[level].len().is_multiple_of(2) {
            let n = self.levels[level].len();
            let parent = node_hash(&self.levels[level][n - 2], &self.levels[level][n - 1]);
            if self.levels.len() == level + 1 {
                self.levels.push(Vec::new());
            }
            self.levels[level + 1].push(parent);
            level += 1;
        }
    }

    pub fn leaf_hash_at(&self, index: u64) -> Option<Digest> {
        self.levels.first()?.get(index as usize).copied()
    }

    pub fn root(&self) -> RootHash {
        self.root_at(self.leaf_count()).expect("current size is in range")
    }

    /// Root of the first `size` leaves.
    pub fn root_at(&self, size: u64) -> Result<RootHash, MerkleError> {
        if size > self.leaf_count() {
            return Err(MerkleError::IndexOutOfRange {
                index: size,
                size: self.leaf_count(),
            });
        }
        if size == 0 {
            return Ok(empty_root());
        }
        Ok(self.subtree(0, size))
    }

    fn subtree(&self, start: u64, size: u64) -> Digest {
        if size.is_power_of_two() && start.is_multiple_of(size) {
            let level = size.trailing_zeros() as usize;
            return self.levels[level][(start >> level) as usize];
        }
        let k = split_point(size);
        node_hash(&self.subtree(start, k), &self.subtree(start + k, size - k))
    }

    pub fn audit_path(&self, index: u64) -> Result<AuditPath, MerkleError> {
        self.audit_path_at(index, self.leaf_count())
    }

    /// Inclusion path for leaf `index` in the tree formed by the first
    /// `tree_size` leaves.
    pub fn audit_path_at(&self, index: u64, tree_size: u64) -> Result<AuditPath, MerkleError> {
        if tree_size > self.leaf_count() || index >= tree_size {
            return Err(MerkleError::IndexOutOfRange {
                index,
                size: tree_size.min(self.leaf_count()),
            });
        }
        let mut siblings = Vec::new();
        self.path_into(index, 0, tree_size, &mut siblings);
        Ok(AuditPath {
            leaf_index: index,
            sibling_hashes: siblings,
        })
    }

    // Siblings are pushed leaf-side first.
    fn path_into(&self, index: u64, start: u64, size: u64, out: &mut Vec<Digest>) {
        if size <= 1 {
            return;
        }
        let k = split_point(size);
        if index < k {
            self.path_into(index, start, k, out);
            out.push(self.subtree(start + k, size - k));
        } else {
            self.path_into(index - k, start + k, size - k, out);
            out.push(self.subtree(start, k));
        }
    }

    pub fn consistency_proof(&self, old_size: u64, new_size: u64) -> Result<ConsistencyProof, MerkleError> {
        if old_size == 0 || old_size > new_size || new_size > self.leaf_count() {
            return Err(MerkleError::IndexOutOfRange {
                index: if old_size == 0 { 0 } else { new_size },
                size: self.leaf_count(),
            });
        }
        let mut hashes = Vec::new();
        if old_size < new_size {
            self.subproof_into(old_size, 0, new_size, true, &mut hashes);
        }
        Ok(ConsistencyProof {
            old_size,
            new_size,
            hashes,
        })
    }

    fn subproof_into(&self, m: u64, start: u64, n: u64, whole: bool, out: &mut Vec<Digest>) {
        if m == n {
            if !whole {
                out.push(self.subtree(start, n));
            }
            return;
        }
        let k = split_point(n);
        if m <= k {
            self.subproof_into(m, start, k, whole, out);
            out.push(self.subtree(start + k, n - k));
        } else {
            self.subproof_into(m - k, start + k, n - k, false, out);
            out.push(self.subtree(start, k));
        }
    }
}

pub fn verify_audit(leaf: &[u8], index: u64, tree_size: u64, path: &AuditPath, root: &RootHash) -> bool {
    if index >= tree_size || path.leaf_index != index {
        return false;
    }
    let mut f = index;
    let mut s = tree_size - 1;
    let mut r = leaf_hash(leaf);
    for p in &path.sibling_hashes {
        if s == 0 {
            return false;
        }
        if f & 1 == 1 || f == s {
            r = node_hash(p, &r);
            if f & 1 == 0 {
                while f & 1 == 0 && f != 0 {
                    f >>= 1;
                    s >>= 1;
                }
            }
        } else {
            r = node_hash(&r, p);
        }
        f >>= 1;
        s >>= 1;
    }
    s == 0 && r == *root
}

pub fn verify_consistency(old_root: &RootHash, new_root: &RootHash, proof: &ConsistencyProof) -> bool {
    let (m, n) = (proof.old_size, proof.new_size);
    if m == 0 || m > n {
        return false;
    }
    if m == n {
        return proof.hashes.is_empty() && old_root == new_root;
    }
    let mut path: Vec<Digest> = Vec::with_capacity(proof.hashes.len() + 1);
    if m.is_power_of_two() {
        path.push(*old_root);
    }
    path.extend_from_slice(&proof.hashes);
    let Some((first, rest)) = path.split_first() else {
        return false;
    };
    let mut f = m - 1;
    let mut s = n - 1;
    while f & 1 == 1 {
        f >>= 1;
        s >>= 1;
    }
    let mut fr = *first;
    let mut sr = *first;
    for c in rest {
        if s == 0 {
            return false;
        }
        if f & 1 == 1 || f == s {
            fr = node_hash(c, &fr);
            sr = node_hash(c, &sr);
            if f & 1 == 0 {
                while f & 1 == 0 && f != 0 {
                    f >>= 1;
                    s >>= 1;
                }
            }
        } else {
            sr = node_hash(&sr, c);
        }
        f >>= 1;
        s >>= 1;
    }
    fr == *old_root && sr == *new_root && s == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference root: the recursive definition evaluated directly.
    fn naive_root(leaves: &[Vec<u8>]) -> Digest {
        match leaves.len() {
            0 => empty_root(),
            1 => leaf_hash(&leaves[0]),
            n => {
                let k = split_point(n as u64) as usize;
                node_hash(&naive_root(&leaves[..k]), &naive_root(&leaves[k..]))
            }
        }
    }

    fn random_leaves(seed: u64, n: usize) -> Vec<Vec<u8>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let len = rng.gen_range(0..48);
                (0..len).map(|_| rng.gen()).collect()
            })
            .collect()
    }

    fn sha(parts: &[&[u8]]) -> Digest {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p);
        }
        Digest(h.finalize().into())
    }

    #[test]
    fn rfc6962_empty_and_small_vectors() {
        assert_eq!(
            empty_root().to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        // Leaf hash of the empty leaf, from the RFC 6962 test data.
        assert_eq!(
            leaf_hash(b"").to_hex(),
            "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d"
        );
    }

    #[test]
    fn single_and_two_leaf_roots() {
        let mut t = MerkleTree::new();
        let r1 = t.append(b"L1");
        assert_eq!(r1, sha(&[&[0x00], b"L1"]));
        let r2 = t.append(b"L2");
        let h1 = sha(&[&[0x00], b"L1"]);
        let h2 = sha(&[&[0x00], b"L2"]);
        assert_eq!(r2, sha(&[&[0x01], &h1.0, &h2.0]));
    }

    #[test]
    fn incremental_matches_batch_for_1000_leaves() {
        let leaves = random_leaves(7, 1000);
        let mut t = MerkleTree::new();
        for (i, leaf) in leaves.iter().enumerate() {
            let root = t.append(leaf);
            if i % 97 == 0 || i == 999 {
                assert_eq!(root, naive_root(&leaves[..=i]), "size {}", i + 1);
            }
        }
        assert_eq!(t, MerkleTree::from_leaves(&leaves));
        assert_eq!(t.root(), naive_root(&leaves));
    }

    #[test]
    fn every_prefix_root_matches_reference() {
        let leaves = random_leaves(11, 1024);
        let t = MerkleTree::from_leaves(&leaves);
        for n in 0..=1024usize {
            assert_eq!(t.root_at(n as u64).unwrap(), naive_root(&leaves[..n]), "n={n}");
        }
        assert!(t.root_at(1025).is_err());
    }

    #[test]
    fn single_leaf_path_is_empty() {
        let t = MerkleTree::from_leaves([b"only"]);
        let p = t.audit_path(0).unwrap();
        assert!(p.sibling_hashes.is_empty());
        assert!(verify_audit(b"only", 0, 1, &p, &t.root()));
    }

    #[test]
    fn audit_index_out_of_range() {
        let t = MerkleTree::from_leaves([b"a", b"b", b"c"]);
        assert_eq!(t.audit_path(3), Err(MerkleError::IndexOutOfRange { index: 3, size: 3 }));
        assert!(MerkleTree::new().audit_path(0).is_err());
    }

    #[test]
    fn all_paths_of_eight_leaf_tree_verify() {
        let leaves = random_leaves(3, 8);
        let t = MerkleTree::from_leaves(&leaves);
        for (i, leaf) in leaves.iter().enumerate() {
            let p = t.audit_path(i as u64).unwrap();
            assert_eq!(p.sibling_hashes.len(), 3);
            assert!(verify_audit(leaf, i as u64, 8, &p, &t.root()));
        }
    }

    #[test]
    fn audit_completeness_and_path_length_up_to_256() {
        for n in 1..=256u64 {
            let leaves = random_leaves(n, n as usize);
            let t = MerkleTree::from_leaves(&leaves);
            let root = t.root();
            let max_len = 64 - (n - 1).leading_zeros() as usize;
            for i in 0..n {
                let p = t.audit_path(i).unwrap();
                assert!(p.sibling_hashes.len() <= max_len);
                assert!(verify_audit(&leaves[i as usize], i, n, &p, &root), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn flipped_bits_fail_verification() {
        let leaves = random_leaves(5, 13);
        let t = MerkleTree::from_leaves(&leaves);
        let root = t.root();
        let leaf = leaves[6].clone();
        let p = t.audit_path(6).unwrap();
        for byte in 0..leaf.len() {
            for bit in 0..8 {
                let mut m = leaf.clone();
                m[byte] ^= 1 << bit;
                assert!(!verify_audit(&m, 6, 13, &p, &root));
            }
        }
    }

    #[test]
    fn wrong_index_fails_verification() {
        let leaves = random_leaves(9, 13);
        let t = MerkleTree::from_leaves(&leaves);
        let root = t.root();
        for i in 0..13u64 {
            let p = t.audit_path(i).unwrap();
            for wrong in [i.wrapping_sub(1), i + 1] {
                if wrong < 13 {
                    let moved = AuditPath {
                        leaf_index: wrong,
                        ..p.clone()
                    };
                    assert!(!verify_audit(&leaves[i as usize], wrong, 13, &moved, &root));
                }
            }
            assert!(!verify_audit(&leaves[i as usize], i, i, &p, &root));
        }
        // The last leaf's path has a different shape in a 14-leaf tree.
        let last = t.audit_path(12).unwrap();
        assert!(!verify_audit(&leaves[12], 12, 14, &last, &root));
    }

    #[test]
    fn tamper_evidence_exhaustive_small_trees() {
        for n in 1..=64usize {
            let leaves = random_leaves(100 + n as u64, n);
            let root = MerkleTree::from_leaves(&leaves).root();
            for i in 0..n {
                let mut m = leaves.clone();
                m[i].push(0xAA);
                assert_ne!(MerkleTree::from_leaves(&m).root(), root, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn tamper_evidence_256() {
        let leaves = random_leaves(256, 256);
        let root = MerkleTree::from_leaves(&leaves).root();
        for i in 0..256 {
            let mut m = leaves.clone();
            if m[i].is_empty() {
                m[i].push(1);
            } else {
                m[i][0] ^= 0x01;
            }
            assert_ne!(MerkleTree::from_leaves(&m).root(), root, "i={i}");
        }
    }

    #[test]
    fn consistency_equal_sizes() {
        let t = MerkleTree::from_leaves(random_leaves(1, 5));
        let p = t.consistency_proof(5, 5).unwrap();
        assert!(p.hashes.is_empty());
        assert!(verify_consistency(&t.root(), &t.root(), &p));
        let other = MerkleTree::from_leaves(random_leaves(2, 5)).root();
        assert!(!verify_consistency(&other, &t.root(), &p));
    }

    #[test]
    fn consistency_four_to_seven() {
        let leaves = random_leaves(21, 7);
        let t = MerkleTree::from_leaves(&leaves);
        let p = t.consistency_proof(4, 7).unwrap();
        assert!(verify_consistency(&t.root_at(4).unwrap(), &t.root(), &p));
    }

    #[test]
    fn consistency_all_pairs_up_to_40() {
        let leaves = random_leaves(33, 40);
        let t = MerkleTree::from_leaves(&leaves);
        for n in 1..=40 {
            for m in 1..=n {
                let p = t.consistency_proof(m, n).unwrap();
                let old = t.root_at(m).unwrap();
                let new = t.root_at(n).unwrap();
                assert!(verify_consistency(&old, &new, &p), "{m}->{n}");
                if m < n {
                    assert!(!verify_consistency(&new, &new, &p), "{m}->{n}");
                }
            }
        }
    }

    #[test]
    fn consistency_detects_rewritten_history() {
        let leaves = random_leaves(4, 4);
        let honest = MerkleTree::from_leaves(&leaves);
        let old_root = honest.root();
        let mut forged = leaves.clone();
        forged[2] = b"rewritten".to_vec();
        forged.extend(random_leaves(5, 3));
        let forged_tree = MerkleTree::from_leaves(&forged);
        let p = forged_tree.consistency_proof(4, 7).unwrap();
        assert!(!verify_consistency(&old_root, &forged_tree.root(), &p));
    }

    #[test]
    fn consistency_range_errors() {
        let t = MerkleTree::from_leaves(random_leaves(1, 5));
        assert!(t.consistency_proof(0, 3).is_err());
        assert!(t.consistency_proof(4, 3).is_err());
        assert!(t.consistency_proof(3, 6).is_err());
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = leaf_hash(b"x");
        assert_eq!(Digest::from_hex(&d.to_hex()), Some(d));
        assert_eq!(Digest::from_hex("abcd"), None);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json.len(), 66);
        assert_eq!(serde_json::from_str::<Digest>(&json).unwrap(), d);
    }

    proptest! {
        #[test]
        fn prop_incremental_equals_rebuild(seed in any::<u64>(), n in 1usize..300) {
            let leaves = random_leaves(seed, n);
            let mut t = MerkleTree::new();
            for l in &leaves {
                t.append(l);
            }
            prop_assert_eq!(t.root(), naive_root(&leaves));
        }

        #[test]
        fn prop_consistency_verifies(seed in any::<u64>(), n in 1u64..200, m_frac in 0.0f64..1.0) {
            let leaves = random_leaves(seed, n as usize);
            let t = MerkleTree::from_leaves(&leaves);
            let m = ((n as f64 * m_frac) as u64).clamp(1, n);
            let p = t.consistency_proof(m, n).unwrap();
            prop_assert!(verify_consistency(&t.root_at(m).unwrap(), &t.root(), &p));
        }
    }
}
