use std::collections::BTreeSet;

use crate::error::{PimError, Result};
use crate::model::{Col, PartitionConfig};

/// Tracks which cells of each partition are live.
///
/// Each partition has a high-water mark plus a set of freed offsets below it;
/// the lowest free offset is always handed out first.
#[derive(Debug, Clone)]
pub struct Allocator {
    config: PartitionConfig,
    high: Vec<usize>,
    free: Vec<BTreeSet<usize>>,
    live: usize,
    peak: usize,
}

impl Allocator {
    pub fn new(config: PartitionConfig) -> Self {
        Allocator {
            config,
            high: vec![0; config.k()],
            free: vec![BTreeSet::new(); config.k()],
            live: 0,
            peak: 0,
        }
    }

    pub fn config(&self) -> &PartitionConfig {
        &self.config
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    /// Largest offset ever handed out in any partition, plus one.
    pub fn used_width(&self) -> usize {
        self.high.iter().copied().max().unwrap_or(0)
    }

    fn is_free(&self, p: usize, off: usize) -> bool {
        off >= self.high[p] || self.free[p].contains(&off)
    }

    fn take(&mut self, p: usize, off: usize) {
        if off >= self.high[p] {
            self.free[p].extend(self.high[p]..off);
            self.high[p] = off + 1;
        } else {
            let was_free = self.free[p].remove(&off);
            debug_assert!(was_free, "offset {off} of partition {p} already live");
        }
        self.live += 1;
        self.peak = self.peak.max(self.live);
    }

    /// Takes `n` free cells, lowest first. With `partition` set, only cells of
    /// that partition are eligible; otherwise partitions are tried in order.
    pub fn alloc(&mut self, n: usize, partition: Option<usize>) -> Result<Vec<Col>> {
        let parts: Vec<usize> = match partition {
            Some(p) if p < self.config.k() => vec![p],
            Some(p) => return Err(PimError::InvalidArgument(format!("partition {p} out of range"))),
            None => (0..self.config.k()).collect(),
        };
        let width = self.config.partition_width();
        let available: usize = parts.iter().map(|&p| self.free[p].len() + width.saturating_sub(self.high[p])).sum();
        if available < n {
            return Err(PimError::Capacity { partition });
        }
        let mut out = Vec::with_capacity(n);
        for &p in &parts {
            while out.len() < n {
                let off = match self.free[p].first() {
                    Some(&o) => o,
                    None if self.high[p] < width => self.high[p],
                    None => break,
                };
                self.take(p, off);
                out.push(self.config.col(p, off));
            }
        }
        Ok(out)
    }

    /// Takes `n` adjacent cells in one partition.
    pub fn alloc_run(&mut self, n: usize, partition: usize) -> Result<Vec<Col>> {
        let width = self.config.partition_width();
        let start = (0..=width.saturating_sub(n))
            .find(|&s| (s..s + n).all(|o| self.is_free(partition, o)))
            .ok_or(PimError::Capacity { partition: Some(partition) })?;
        for o in start..start + n {
            self.take(partition, o);
        }
        Ok((start..start + n).map(|o| self.config.col(partition, o)).collect())
    }

    /// Takes the lowest offset that is free in every partition of `parts`,
    /// reserving that offset in each of them.
    pub fn alloc_offset(&mut self, parts: &[usize]) -> Result<usize> {
        let width = self.config.partition_width();
        let first = parts[0];
        let candidates = self.free[first].iter().copied().chain(self.high[first]..width);
        let mut chosen = None;
        for off in candidates {
            if parts.iter().all(|&p| self.is_free(p, off)) {
                chosen = Some(off);
                break;
            }
        }
        let off = chosen.ok_or(PimError::Capacity { partition: None })?;
        for &p in parts {
            self.take(p, off);
        }
        Ok(off)
    }

    pub fn free(&mut self, col: Col) {
        let p = self.config.partition_of(col);
        let off = self.config.offset_of(col);
        debug_assert!(off < self.high[p] && !self.free[p].contains(&off), "double free of column {col}");
        self.free[p].insert(off);
        self.live -= 1;
    }

    pub fn free_offset(&mut self, parts: &[usize], off: usize) {
        for &p in parts {
            self.free(self.config.col(p, off));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_from_operands() {
        let mut a = Allocator::new(PartitionConfig::unpartitioned(16).unwrap());
        let x = a.alloc_run(4, 0).unwrap();
        let y = a.alloc_run(4, 0).unwrap();
        let c = a.alloc(1, None).unwrap()[0];
        assert!(!x.contains(&c) && !y.contains(&c) && (8..16).contains(&c));
    }

    #[test]
    fn reuse_after_free() {
        let mut a = Allocator::new(PartitionConfig::unpartitioned(16).unwrap());
        let c = a.alloc(1, None).unwrap()[0];
        a.free(c);
        assert_eq!(a.alloc(1, None).unwrap()[0], c);
        assert_eq!(a.peak(), 1);
    }

    #[test]
    fn exhaustion_names_partition() {
        let mut a = Allocator::new(PartitionConfig::new(2, 8).unwrap());
        a.alloc(8, Some(1)).unwrap();
        assert!(matches!(a.alloc(9, Some(0)), Err(PimError::Capacity { partition: Some(0) })));
        assert!(matches!(a.alloc(1, Some(1)), Err(PimError::Capacity { partition: Some(1) })));
    }

    #[test]
    fn offsets_are_common() {
        let mut a = Allocator::new(PartitionConfig::new(4, 8).unwrap());
        a.alloc(2, Some(2)).unwrap();
        let off = a.alloc_offset(&[0, 1, 2, 3]).unwrap();
        assert_eq!(off, 2);
        a.free_offset(&[0, 1, 2, 3], off);
        assert_eq!(a.alloc_offset(&[0, 1]).unwrap(), 0);
    }
}
