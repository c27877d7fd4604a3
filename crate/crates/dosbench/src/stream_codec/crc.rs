//! CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF, no
//! reflection, no final xor. Check value for "123456789" is 0x29B1.

pub fn crc16_ccitt_false(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in data {
        crc ^= u16::from(byte) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc
}

#[cfg(test)]
mod tests {
    use super::*;

    // Table-driven reference, generated independently of the bitwise
    // production routine above.
    fn oracle_crc16(data: &[u8]) -> u16 {
        let mut table = [0u16; 256];
        for (i, slot) in table.iter_mut().enumerate() {
            let mut v = (i as u16) << 8;
            for _ in 0..8 {
                v = if v & 0x8000 != 0 { (v << 1) ^ 0x1021 } else { v << 1 };
            }
            *slot = v;
        }
        let mut crc: u16 = 0xFFFF;
        for &byte in data {
            let idx = ((crc >> 8) ^ u16::from(byte)) & 0xFF;
            crc = (crc << 8) ^ table[idx as usize];
        }
        crc
    }

    #[test]
    fn known_check_value() {
        assert_eq!(crc16_ccitt_false(b"123456789"), 0x29B1);
    }

    #[test]
    fn empty_input_is_initial_value() {
        assert_eq!(crc16_ccitt_false(&[]), 0xFFFF);
    }

    #[test]
    fn fixed_vectors() {
        assert_eq!(crc16_ccitt_false(b"A"), 0xB915);
        assert_eq!(crc16_ccitt_false(&[0xFF; 4]), 0x1D0F);
    }

    #[test]
    fn matches_table_oracle_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1021);
        for _ in 0..1000 {
            let len = rng.gen_range(0..=96);
            let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            assert_eq!(crc16_ccitt_false(&data), oracle_crc16(&data));
        }
    }
}
