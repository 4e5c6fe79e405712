//! Set-associative event memory: banks of per-line blocks with FIFO
//! replacement.
//!
//! A line (a sensor row for the row module, a column for the column module)
//! lives in bank `line mod N` at block `line / N`. The line coordinate itself
//! is implied by the address, so a slot only keeps the cross coordinate and
//! the quantized timestamp.

use crate::events::Polarity;

pub fn bank_index(line: u32, banks: u32) -> u32 {
    line % banks
}

pub fn block_index(line: u32, banks: u32) -> u32 {
    line / banks
}

/// `floor(t / quant_unit) mod 2^bw_t`.
pub fn quantize_ts(t: u64, quant_unit: u64, bw_t: u32) -> u64 {
    (t / quant_unit) & super::config::tick_mask(bw_t)
}

/// `(now - stored) mod 2^bw_t`.
pub fn wrapped_diff(tq_now: u64, tq_stored: u64, bw_t: u32) -> u64 {
    tq_now.wrapping_sub(tq_stored) & super::config::tick_mask(bw_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoredEvent {
    /// x for the row module, y for the column module.
    pub coord: u16,
    pub tq: u64,
    pub polarity: Polarity,
    pub valid: bool,
}

impl StoredEvent {
    pub const INVALID: StoredEvent = StoredEvent {
        coord: 0,
        tq: 0,
        polarity: Polarity::Off,
        valid: false,
    };

    pub fn new(coord: u16, tq: u64, polarity: Polarity) -> Self {
        Self {
            coord,
            tq,
            polarity,
            valid: true,
        }
    }
}

/// What the event decision unit compares a block against.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub coord: u16,
    pub tq: u64,
    pub polarity: Option<Polarity>,
    pub d_th: u32,
    pub t_th_ticks: u64,
    pub mask: u64,
}

/// Read-only view of one block: `s` slots written round-robin by the write
/// pointer.
#[derive(Debug, Clone, Copy)]
pub struct BlockView<'a> {
    slots: &'a [StoredEvent],
    wpt: u32,
}

impl<'a> BlockView<'a> {
    pub fn capacity(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn wpt(&self) -> u32 {
        self.wpt
    }

    pub fn slots(&self) -> &'a [StoredEvent] {
        self.slots
    }

    /// Number of valid entries. Slots fill in order, so the block is full
    /// exactly when the slot under the write pointer is valid.
    pub fn filled(&self) -> u32 {
        if self.slots[self.wpt as usize].valid {
            self.capacity()
        } else {
            self.wpt
        }
    }

    /// Valid entries, oldest first.
    pub fn entries_oldest_first(&self) -> impl Iterator<Item = &'a StoredEvent> {
        let (newer, older) =
            self.slots[..self.filled() as usize].split_at(if self.filled() == self.capacity() {
                self.wpt as usize
            } else {
                self.filled() as usize
            });
        older.iter().chain(newer.iter())
    }

    #[inline]
    pub fn count_matches(&self, p: &Probe) -> u32 {
        count_slots(self.slots, p)
    }
}

// Above this capacity, windows are scanned block by block over filled slots
// only.
const DENSE_SCAN_MAX_CAPACITY: usize = 16;

#[inline]
fn count_slots(slots: &[StoredEvent], p: &Probe) -> u32 {
    let mut n = 0;
    for s in slots {
        if s.valid
            && u32::from(s.coord.abs_diff(p.coord)) <= p.d_th
            && (p.tq.wrapping_sub(s.tq) & p.mask) <= p.t_th_ticks
            && p.polarity.is_none_or(|q| q == s.polarity)
        {
            n += 1;
        }
    }
    n
}

#[inline]
fn fifo_write(slots: &mut [StoredEvent], wpt: &mut u32, entry: StoredEvent) -> Option<StoredEvent> {
    let slot = &mut slots[*wpt as usize];
    let evicted = slot.valid.then_some(*slot);
    *slot = entry;
    *wpt += 1;
    if *wpt == slots.len() as u32 {
        *wpt = 0;
    }
    evicted
}

/// A standalone block.
#[derive(Debug, Clone)]
pub struct MemoryBlock {
    slots: Box<[StoredEvent]>,
    wpt: u32,
}

impl MemoryBlock {
    pub fn new(capacity: u32) -> Self {
        assert!(capacity >= 1, "block capacity must be >= 1");
        Self {
            slots: vec![StoredEvent::INVALID; capacity as usize].into_boxed_slice(),
            wpt: 0,
        }
    }

    pub fn view(&self) -> BlockView<'_> {
        BlockView {
            slots: &self.slots,
            wpt: self.wpt,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.view().capacity()
    }

    pub fn wpt(&self) -> u32 {
        self.wpt
    }

    pub fn slots(&self) -> &[StoredEvent] {
        &self.slots
    }

    pub fn entries_oldest_first(&self) -> impl Iterator<Item = &StoredEvent> {
        self.view().entries_oldest_first()
    }

    pub fn count_matches(&self, p: &Probe) -> u32 {
        self.view().count_matches(p)
    }

    /// Overwrites the slot under the write pointer and advances it. Returns
    /// the evicted entry, if the slot was valid.
    pub fn write(&mut self, entry: StoredEvent) -> Option<StoredEvent> {
        fifo_write(&mut self.slots, &mut self.wpt, entry)
    }

    pub fn clear(&mut self) {
        self.slots.fill(StoredEvent::INVALID);
        self.wpt = 0;
    }
}

/// Correlated-entry count of one block, as computed by an event decision
/// unit: entries within `d_th` on the cross coordinate whose wrapped tick
/// difference is at most `t_th_ticks`.
pub fn edu_count(
    block: BlockView<'_>,
    coord_now: u16,
    tq_now: u64,
    d_th: u32,
    t_th_ticks: u64,
    bw_t: u32,
) -> u32 {
    block.count_matches(&Probe {
        coord: coord_now,
        tq: tq_now,
        polarity: None,
        d_th,
        t_th_ticks,
        mask: super::config::tick_mask(bw_t),
    })
}

/// One bank of a module: the blocks of lines `bank, bank + N, bank + 2N, ...`.
#[derive(Debug, Clone, Copy)]
pub struct BankView<'a> {
    module: &'a MemoryModule,
    bank: u32,
}

impl<'a> BankView<'a> {
    pub fn index(&self) -> u32 {
        self.bank
    }

    /// Blocks in block-index order.
    pub fn blocks(&self) -> impl ExactSizeIterator<Item = BlockView<'a>> {
        let m = self.module;
        let start = self.bank.min(m.lines);
        (start..m.lines)
            .step_by(m.n_banks as usize)
            .map(move |l| m.block(l))
    }
}

/// All banks of one module (row or column memory).
///
/// Storage is line-major, so the blocks of a window of adjacent lines are
/// contiguous; banks are views over it.
#[derive(Debug, Clone)]
pub struct MemoryModule {
    n_banks: u32,
    lines: u32,
    capacity: u32,
    slots: Vec<StoredEvent>,
    wpt: Vec<u32>,
}

impl MemoryModule {
    /// One block per line; bank `b` holds exactly the lines `l` with
    /// `l mod n_banks == b`.
    pub fn new(lines: u32, n_banks: u32, capacity: u32) -> Self {
        assert!(n_banks >= 1);
        assert!(capacity >= 1, "block capacity must be >= 1");
        Self {
            n_banks,
            lines,
            capacity,
            slots: vec![StoredEvent::INVALID; lines as usize * capacity as usize],
            wpt: vec![0; lines as usize],
        }
    }

    pub fn banks(&self) -> impl ExactSizeIterator<Item = BankView<'_>> {
        (0..self.n_banks).map(move |bank| BankView { module: self, bank })
    }

    pub fn n_banks(&self) -> u32 {
        self.n_banks
    }

    pub fn lines(&self) -> u32 {
        self.lines
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// `(bank, block)` address of `line`.
    pub fn address(&self, line: u32) -> (u32, u32) {
        (
            bank_index(line, self.n_banks),
            block_index(line, self.n_banks),
        )
    }

    #[inline]
    fn range(&self, line: u32) -> std::ops::Range<usize> {
        let cap = self.capacity as usize;
        let start = line as usize * cap;
        start..start + cap
    }

    #[inline]
    pub fn block(&self, line: u32) -> BlockView<'_> {
        BlockView {
            slots: &self.slots[self.range(line)],
            wpt: self.wpt[line as usize],
        }
    }

    /// Sum of [`BlockView::count_matches`] over the blocks of `lines`.
    #[inline]
    pub fn count_lines(&self, lines: std::ops::Range<u32>, p: &Probe) -> u32 {
        let cap = self.capacity as usize;
        if cap > DENSE_SCAN_MAX_CAPACITY {
            return self.count_lines_sparse(lines, p);
        }
        count_slots(
            &self.slots[lines.start as usize * cap..lines.end as usize * cap],
            p,
        )
    }

    #[inline(never)]
    fn count_lines_sparse(&self, lines: std::ops::Range<u32>, p: &Probe) -> u32 {
        lines
            .map(|l| {
                let b = self.block(l);
                count_slots(&b.slots[..b.filled() as usize], p)
            })
            .sum()
    }

    /// FIFO write into the block of `line`; returns the evicted entry.
    #[inline]
    pub fn write(&mut self, line: u32, entry: StoredEvent) -> Option<StoredEvent> {
        let r = self.range(line);
        fifo_write(&mut self.slots[r], &mut self.wpt[line as usize], entry)
    }

    pub fn clear(&mut self) {
        self.slots.fill(StoredEvent::INVALID);
        self.wpt.fill(0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_with(entries: &[(u16, u64)], cap: u32) -> MemoryBlock {
        let mut b = MemoryBlock::new(cap);
        for &(c, t) in entries {
            b.write(StoredEvent::new(c, t, Polarity::On));
        }
        b
    }

    #[test]
    fn bank_and_block_indexing() {
        assert_eq!(bank_index(5, 4), 1);
        assert_eq!(bank_index(0, 4), 0);
        assert_eq!(bank_index(7, 1), 0);
        assert_eq!(block_index(5, 4), 1);
        assert_eq!(block_index(3, 4), 0);
        assert_eq!(block_index(9, 1), 9);
    }

    #[test]
    fn quantization() {
        assert_eq!(quantize_ts(1020, 4, 8), 255);
        assert_eq!(quantize_ts(1024, 4, 8), 0);
        assert_eq!(quantize_ts(123_456_789, 1, 64), 123_456_789);
        assert_eq!(quantize_ts(u64::MAX, 1, 64), u64::MAX);
    }

    #[test]
    fn wrapping_difference() {
        assert_eq!(wrapped_diff(2, 250, 8), 8);
        assert_eq!(wrapped_diff(100, 100, 8), 0);
        assert_eq!(wrapped_diff(5, 10, 8), 251);
        assert_eq!(wrapped_diff(10, 3, 64), 7);
    }

    #[test]
    fn edu_examples() {
        let b = block_with(&[(10, 225), (14, 238)], 4);
        assert_eq!(edu_count(b.view(), 11, 250, 1, 50, 8), 1);
        assert_eq!(edu_count(MemoryBlock::new(4).view(), 11, 250, 1, 50, 8), 0);
        let b = block_with(&[(11, 250)], 4);
        assert_eq!(edu_count(b.view(), 11, 250, 1, 50, 8), 1);
    }

    #[test]
    fn edu_counts_across_wrap() {
        // Stored at tick 250, now at tick 2 after a wrap: 8 ticks apart.
        let b = block_with(&[(3, 250)], 2);
        assert_eq!(edu_count(b.view(), 3, 2, 1, 8, 8), 1);
        assert_eq!(edu_count(b.view(), 3, 2, 1, 7, 8), 0);
    }

    #[test]
    fn fifo_replacement_order() {
        let mut b = MemoryBlock::new(3);
        for k in 0..3u16 {
            assert_eq!(b.wpt(), u32::from(k));
            assert!(b
                .write(StoredEvent::new(k, u64::from(k), Polarity::On))
                .is_none());
        }
        assert_eq!(b.wpt(), 0);
        // Fourth write evicts the oldest.
        let ev = b.write(StoredEvent::new(3, 3, Polarity::On)).unwrap();
        assert_eq!(ev.coord, 0);
        let order: Vec<u16> = b.entries_oldest_first().map(|e| e.coord).collect();
        assert_eq!(order, vec![1, 2, 3]);
    }

    #[test]
    fn polarity_gate() {
        let b = block_with(&[(5, 10)], 2);
        let mut p = Probe {
            coord: 5,
            tq: 10,
            polarity: Some(Polarity::Off),
            d_th: 1,
            t_th_ticks: 5,
            mask: u64::MAX,
        };
        assert_eq!(b.count_matches(&p), 0);
        p.polarity = Some(Polarity::On);
        assert_eq!(b.count_matches(&p), 1);
    }

    #[test]
    fn module_layout() {
        let m = MemoryModule::new(10, 4, 2);
        let per_bank: Vec<usize> = m.banks().map(|b| b.blocks().len()).collect();
        assert_eq!(per_bank, vec![3, 3, 2, 2]);
        let m = MemoryModule::new(2, 4, 1);
        let per_bank: Vec<usize> = m.banks().map(|b| b.blocks().len()).collect();
        assert_eq!(per_bank, vec![1, 1, 0, 0]);
    }

    #[test]
    fn module_addresses_each_line_once() {
        let mut m = MemoryModule::new(13, 4, 1);
        for line in 0..13 {
            m.write(line, StoredEvent::new(line as u16, 0, Polarity::On));
        }
        for line in 0..13 {
            assert_eq!(m.block(line).slots()[0].coord, line as u16);
        }
    }

    #[test]
    fn bank_views_cover_lines() {
        let mut m = MemoryModule::new(10, 4, 2);
        m.write(6, StoredEvent::new(1, 5, Polarity::On));
        let bank: Vec<u32> = m
            .banks()
            .nth(2)
            .unwrap()
            .blocks()
            .map(|b| b.filled())
            .collect();
        assert_eq!(bank, vec![0, 1]);
        assert_eq!(m.address(6), (2, 1));
    }

    #[test]
    fn fill_level_follows_writes() {
        let mut b = MemoryBlock::new(2);
        assert_eq!(b.view().filled(), 0);
        b.write(StoredEvent::new(0, 0, Polarity::On));
        assert_eq!(b.view().filled(), 1);
        b.write(StoredEvent::new(0, 0, Polarity::On));
        b.write(StoredEvent::new(0, 0, Polarity::On));
        assert_eq!(b.view().filled(), 2);
        b.clear();
        assert_eq!(b.view().filled(), 0);
    }

    #[test]
    fn window_count_matches_per_block_sum() {
        let mut m = MemoryModule::new(8, 2, 3);
        for (i, line) in [0u32, 1, 1, 3, 4, 4, 4, 4, 7].into_iter().enumerate() {
            m.write(
                line,
                StoredEvent::new(i as u16 % 4, i as u64 * 3, Polarity::On),
            );
        }
        let p = Probe {
            coord: 2,
            tq: 20,
            polarity: None,
            d_th: 1,
            t_th_ticks: 12,
            mask: 255,
        };
        for lo in 0..8 {
            for hi in lo..=8 {
                let want: u32 = (lo..hi).map(|l| m.block(l).count_matches(&p)).sum();
                assert_eq!(m.count_lines(lo..hi, &p), want);
            }
        }
    }
}
