#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rsel/signal.hpp"
#include "rsel/subject.hpp"

namespace rsel {

// Decodes the EDF subset used by CHB-MIT: a 256-byte fixed header, 256
// bytes of header per signal, then records of little-endian 16-bit samples
// converted to physical units by the per-signal linear map. All signals
// must share one sample rate. Never reads past the buffer; malformed input
// raises MalformedHeader / TruncatedData / MixedRates.
Recording parse_edf(const std::vector<std::uint8_t>& bytes);

// Writes a Recording back into the same subset with digital range
// [-32768, 32767] and the given physical range (shared by all channels);
// samples are rounded to the nearest digital level and clamped. fs must be
// a positive integer (records are 1 s long) dividing the sample count.
std::vector<std::uint8_t> write_edf(const Recording& rec, double phys_min,
                                    double phys_max);

// Seizure intervals per recording id, parsed from lines of
// `<recording-id>,<onset_sec>,<offset_sec>`. Intervals per id come back
// sorted; overlap raises OverlapError, onset >= offset NegativeDuration.
using AnnotationFile = std::map<std::string, std::vector<Interval>>;
AnnotationFile load_annotations(const std::string& text);

// "RSEL1" epoch container: magic, subject count, then per subject a block
// of id, epoch count, feature dimensions, row-major float64 feature
// matrices and labels, closed by a CRC32 of the block. Bit-exact roundtrip;
// NaN features are rejected at write time.
std::vector<std::uint8_t> epoch_store_write(
    const std::vector<SubjectRecord>& subjects);
std::vector<SubjectRecord> epoch_store_read(
    const std::vector<std::uint8_t>& bytes, double epoch_len_sec = 10.0);

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

}  // namespace rsel
