//! Random linear coding over GF(2): a receiver that already knows some
//! blocks needs only about as many packets as it has unknowns.

use std::collections::BTreeMap;

use cache_channel::codec::{encode, Decoder};

fn main() {
    let blocks: Vec<u64> = (0..200u64).map(|i| i.wrapping_mul(0x9e37_79b9) & 0xffff).collect();
    let packets = encode(&blocks, 400, 0, 7);
    for known_share in [0, 4, 2] {
        let known: BTreeMap<usize, u64> = if known_share == 0 {
            BTreeMap::new()
        } else {
            (0..blocks.len()).step_by(known_share).map(|j| (j, blocks[j])).collect()
        };
        let mut dec = Decoder::new(blocks.len(), known);
        let unknowns = dec.unknowns();
        let used = packets.iter().take_while(|p| {
            dec.push(p);
            !dec.is_complete()
        });
        let used = used.count() + 1;
        let decoded = dec.finish().expect("enough packets");
        assert_eq!(decoded, blocks);
        println!("{unknowns} unknown blocks decoded from {used} packets");
    }
}
