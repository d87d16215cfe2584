#include "rsel/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <utility>

#include "rsel/errors.hpp"

namespace rsel {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string field(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                  std::size_t len) {
  return std::string(reinterpret_cast<const char*>(bytes.data()) + offset,
                     len);
}

double parse_double_field(const std::string& raw, const char* what) {
  const std::string s = trim(raw);
  if (s.empty()) throw MalformedHeader(std::string(what) + " field is empty");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v))
    throw MalformedHeader(std::string(what) + " field is not numeric: '" + s +
                          "'");
  return v;
}

long long parse_int_field(const std::string& raw, const char* what) {
  const std::string s = trim(raw);
  if (s.empty()) throw MalformedHeader(std::string(what) + " field is empty");
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size())
    throw MalformedHeader(std::string(what) + " field is not an integer: '" +
                          s + "'");
  return v;
}

constexpr std::size_t kFixedHeader = 256;
constexpr std::size_t kPerSignalHeader = 256;

}  // namespace

Recording parse_edf(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kFixedHeader)
    throw TruncatedData("file shorter than the 256-byte EDF header");

  const long long ns = parse_int_field(field(bytes, 252, 4), "signal count");
  if (ns < 1) throw MalformedHeader("EDF declares no signals");
  const long long n_records =
      parse_int_field(field(bytes, 236, 8), "record count");
  if (n_records < 0) throw MalformedHeader("negative record count");
  const double duration =
      parse_double_field(field(bytes, 244, 8), "record duration");
  if (!(duration > 0.0)) throw MalformedHeader("record duration must be > 0");

  const std::size_t header_bytes =
      kFixedHeader + kPerSignalHeader * static_cast<std::size_t>(ns);
  if (bytes.size() < header_bytes)
    throw TruncatedData("file shorter than its signal headers");

  // Per-signal header fields are stored as contiguous arrays.
  const std::size_t base = kFixedHeader;
  const auto sig_field = [&](std::size_t block_off, std::size_t width,
                             long long s) {
    return field(bytes, base + block_off + width * static_cast<std::size_t>(s),
                 width);
  };
  const std::size_t off_phys_min = (16 + 80 + 8) * static_cast<std::size_t>(ns);
  const std::size_t off_phys_max = off_phys_min + 8 * static_cast<std::size_t>(ns);
  const std::size_t off_dig_min = off_phys_max + 8 * static_cast<std::size_t>(ns);
  const std::size_t off_dig_max = off_dig_min + 8 * static_cast<std::size_t>(ns);
  const std::size_t off_spr =
      off_dig_max + (8 + 80) * static_cast<std::size_t>(ns);

  std::vector<double> pmin(ns), pmax(ns), dmin(ns), dmax(ns);
  long long spr = -1;
  for (long long s = 0; s < ns; ++s) {
    pmin[s] = parse_double_field(sig_field(off_phys_min, 8, s), "physical min");
    pmax[s] = parse_double_field(sig_field(off_phys_max, 8, s), "physical max");
    dmin[s] = parse_double_field(sig_field(off_dig_min, 8, s), "digital min");
    dmax[s] = parse_double_field(sig_field(off_dig_max, 8, s), "digital max");
    if (!(dmax[s] > dmin[s]))
      throw MalformedHeader("digital max must exceed digital min");
    if (pmax[s] == pmin[s])
      throw MalformedHeader("physical max equals physical min");
    const long long this_spr =
        parse_int_field(sig_field(off_spr, 8, s), "samples per record");
    if (this_spr < 1) throw MalformedHeader("samples per record must be >= 1");
    if (s == 0)
      spr = this_spr;
    else if (this_spr != spr)
      throw MixedRates("signals disagree on samples per record");
  }

  const unsigned __int128 needed =
      static_cast<unsigned __int128>(header_bytes) +
      static_cast<unsigned __int128>(2) * n_records * ns * spr;
  if (needed > bytes.size())
    throw TruncatedData("data area shorter than the header declares");
  if (n_records * spr > 2147483647LL)
    throw MalformedHeader("recording longer than supported");

  Recording rec;
  rec.fs = static_cast<double>(spr) / duration;
  rec.samples = Matrix(static_cast<int>(ns),
                       static_cast<int>(n_records * spr));
  std::size_t pos = header_bytes;
  for (long long r = 0; r < n_records; ++r) {
    for (long long s = 0; s < ns; ++s) {
      const double scale_lo = pmin[s];
      const double scale_hi = pmax[s];
      const double dlo = dmin[s];
      const double span = dmax[s] - dmin[s];
      for (long long t = 0; t < spr; ++t) {
        const auto d = static_cast<std::int16_t>(
            static_cast<std::uint16_t>(bytes[pos]) |
            (static_cast<std::uint16_t>(bytes[pos + 1]) << 8));
        pos += 2;
        // Evaluated in lerp form so the digital endpoints map to the
        // physical endpoints bit-exactly.
        const double u = (static_cast<double>(d) - dlo) / span;
        rec.samples(static_cast<int>(s), static_cast<int>(r * spr + t)) =
            scale_lo * (1.0 - u) + scale_hi * u;
      }
    }
  }
  return rec;
}

namespace {

void put_ascii(std::vector<std::uint8_t>& out, const std::string& s,
               std::size_t width, const char* what) {
  if (s.size() > width)
    throw InvalidArgument(std::string(what) + " does not fit the " +
                          std::to_string(width) + "-char EDF field: '" + s +
                          "'");
  for (std::size_t i = 0; i < width; ++i)
    out.push_back(i < s.size() ? static_cast<std::uint8_t>(s[i]) : ' ');
}

std::string compact_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.8g", v);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> write_edf(const Recording& rec, double phys_min,
                                    double phys_max) {
  if (rec.channels() < 1) throw InvalidArgument("recording has no channels");
  if (!(phys_max > phys_min))
    throw InvalidArgument("physical max must exceed physical min");
  if (!(rec.fs > 0.0) || std::abs(rec.fs - std::round(rec.fs)) > 1e-9)
    throw InvalidArgument("EDF writer needs an integer sample rate");
  const long long spr = std::llround(rec.fs);
  if (rec.n_samples() % spr != 0)
    throw InvalidArgument("sample count must be a multiple of the rate");
  const long long n_records = rec.n_samples() / spr;
  const int ns = rec.channels();

  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + kPerSignalHeader * ns +
              static_cast<std::size_t>(2 * n_records * spr * ns));
  put_ascii(out, "0", 8, "version");
  put_ascii(out, "X", 80, "patient");
  put_ascii(out, "X", 80, "recording");
  put_ascii(out, "01.01.00", 8, "start date");
  put_ascii(out, "00.00.00", 8, "start time");
  put_ascii(out, std::to_string(kFixedHeader + kPerSignalHeader * ns), 8,
            "header bytes");
  put_ascii(out, "", 44, "reserved");
  put_ascii(out, std::to_string(n_records), 8, "record count");
  put_ascii(out, "1", 8, "record duration");
  put_ascii(out, std::to_string(ns), 4, "signal count");

  for (int s = 0; s < ns; ++s)
    put_ascii(out, "EEG ch" + std::to_string(s), 16, "label");
  for (int s = 0; s < ns; ++s) put_ascii(out, "", 80, "transducer");
  for (int s = 0; s < ns; ++s) put_ascii(out, "uV", 8, "dimension");
  for (int s = 0; s < ns; ++s)
    put_ascii(out, compact_number(phys_min), 8, "physical min");
  for (int s = 0; s < ns; ++s)
    put_ascii(out, compact_number(phys_max), 8, "physical max");
  for (int s = 0; s < ns; ++s) put_ascii(out, "-32768", 8, "digital min");
  for (int s = 0; s < ns; ++s) put_ascii(out, "32767", 8, "digital max");
  for (int s = 0; s < ns; ++s) put_ascii(out, "", 80, "prefiltering");
  for (int s = 0; s < ns; ++s)
    put_ascii(out, std::to_string(spr), 8, "samples per record");
  for (int s = 0; s < ns; ++s) put_ascii(out, "", 32, "reserved");

  const double scale = 65535.0 / (phys_max - phys_min);
  for (long long r = 0; r < n_records; ++r) {
    for (int s = 0; s < ns; ++s) {
      for (long long t = 0; t < spr; ++t) {
        const double p = rec.samples(s, static_cast<int>(r * spr + t));
        long long d = std::llround((p - phys_min) * scale) - 32768;
        d = std::clamp(d, -32768LL, 32767LL);
        const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(d));
        out.push_back(static_cast<std::uint8_t>(u & 0xFF));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
      }
    }
  }
  return out;
}

AnnotationFile load_annotations(const std::string& text) {
  AnnotationFile out;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
      throw ParseError("annotation line " + std::to_string(line_no) +
                       " is not <id>,<onset>,<offset>");
    const std::string id = trim(line.substr(0, c1));
    const std::string onset_s = trim(line.substr(c1 + 1, c2 - c1 - 1));
    const std::string offset_s = trim(line.substr(c2 + 1));
    if (id.empty())
      throw ParseError("annotation line " + std::to_string(line_no) +
                       " has an empty recording id");

    char* end = nullptr;
    const double onset = std::strtod(onset_s.c_str(), &end);
    if (onset_s.empty() || end != onset_s.c_str() + onset_s.size())
      throw ParseError("bad onset on line " + std::to_string(line_no));
    const double offset = std::strtod(offset_s.c_str(), &end);
    if (offset_s.empty() || end != offset_s.c_str() + offset_s.size())
      throw ParseError("bad offset on line " + std::to_string(line_no));
    if (!(onset < offset))
      throw NegativeDuration("interval on line " + std::to_string(line_no) +
                             " has onset >= offset");
    if (onset < 0.0)
      throw ParseError("negative onset on line " + std::to_string(line_no));
    out[id].push_back({onset, offset});
  }

  for (auto& [id, intervals] : out) {
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) {
                return a.onset_sec < b.onset_sec;
              });
    for (std::size_t i = 1; i < intervals.size(); ++i)
      if (intervals[i].onset_sec < intervals[i - 1].offset_sec)
        throw OverlapError("overlapping seizure intervals for '" + id + "'");
  }
  return out;
}

namespace {

constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k)
      c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

constexpr std::array<std::uint32_t, 256> kCrcTable = make_crc_table();

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b)
    out.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF));
}

constexpr char kMagic[5] = {'R', 'S', 'E', 'L', '1'};

struct Cursor {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (bytes.size() - pos < n)
      throw ChecksumMismatch(std::string("store truncated inside ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<std::uint32_t>(bytes[pos + b]) << (8 * b);
    pos += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
      v |= static_cast<std::uint64_t>(bytes[pos + b]) << (8 * b);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < size; ++i)
    c = kCrcTable[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> epoch_store_write(
    const std::vector<SubjectRecord>& subjects) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 5);
  put_u32(out, static_cast<std::uint32_t>(subjects.size()));

  for (const SubjectRecord& subj : subjects) {
    if (subj.subject_id.size() > 4096)
      throw InvalidArgument("subject id longer than 4096 bytes");
    if (subj.epochs.empty())
      throw InvalidArgument("subject " + subj.subject_id + " has no epochs");
    if (subj.labels.size() != subj.epochs.size())
      throw DimensionMismatch("label count does not match epoch count");
    const int c = subj.epochs[0].features.rows();
    const int f = subj.epochs[0].features.cols();

    const std::size_t block_start = out.size();
    put_u32(out, static_cast<std::uint32_t>(subj.subject_id.size()));
    out.insert(out.end(), subj.subject_id.begin(), subj.subject_id.end());
    put_u32(out, static_cast<std::uint32_t>(subj.epochs.size()));
    put_u32(out, static_cast<std::uint32_t>(c));
    put_u32(out, static_cast<std::uint32_t>(f));
    for (const Epoch& e : subj.epochs) {
      if (e.features.rows() != c || e.features.cols() != f)
        throw DimensionMismatch("epoch feature shapes differ within subject");
      for (int i = 0; i < c; ++i)
        for (int j = 0; j < f; ++j) {
          const double v = e.features(i, j);
          if (std::isnan(v))
            throw DomainError("NaN feature in subject " + subj.subject_id);
          put_f64(out, v);
        }
    }
    for (std::size_t i = 0; i < subj.labels.size(); ++i) {
      if (subj.labels[i] != 0 && subj.labels[i] != 1)
        throw InvalidArgument("labels must be 0 or 1");
      out.push_back(static_cast<std::uint8_t>(subj.labels[i]));
    }
    put_u32(out, crc32(out.data() + block_start, out.size() - block_start));
  }
  return out;
}

std::vector<SubjectRecord> epoch_store_read(
    const std::vector<std::uint8_t>& bytes, double epoch_len_sec) {
  if (!(epoch_len_sec > 0.0))
    throw InvalidArgument("epoch length must be > 0");
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 5) != 0)
    throw BadMagic("not an RSEL1 epoch store");

  Cursor cur{bytes, 5};
  const std::uint32_t count = cur.u32("subject count");
  if (count > 1000000) throw ChecksumMismatch("implausible subject count");

  std::vector<SubjectRecord> subjects;
  subjects.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::size_t block_start = cur.pos;
    const std::uint32_t id_len = cur.u32("subject id length");
    if (id_len > 4096) throw ChecksumMismatch("implausible subject id length");
    cur.need(id_len, "subject id");
    std::string id(reinterpret_cast<const char*>(bytes.data()) + cur.pos,
                   id_len);
    cur.pos += id_len;

    const std::uint32_t n_epochs = cur.u32("epoch count");
    const std::uint32_t c = cur.u32("channel count");
    const std::uint32_t f = cur.u32("feature count");
    if (n_epochs < 1 || n_epochs > 10000000 || c < 1 || c > 4096 || f < 1 ||
        f > 1000000)
      throw ChecksumMismatch("implausible block dimensions");
    const unsigned long long payload =
        8ULL * n_epochs * c * f + static_cast<unsigned long long>(n_epochs);
    cur.need(payload, "feature payload");

    SubjectRecord subj;
    subj.subject_id = std::move(id);
    subj.epochs.reserve(n_epochs);
    subj.labels.reserve(n_epochs);
    for (std::uint32_t e = 0; e < n_epochs; ++e) {
      Epoch ep;
      ep.features = Matrix(static_cast<int>(c), static_cast<int>(f));
      for (std::uint32_t i = 0; i < c; ++i)
        for (std::uint32_t j = 0; j < f; ++j)
          ep.features(static_cast<int>(i), static_cast<int>(j)) =
              cur.f64("features");
      ep.start_sec = e * epoch_len_sec;
      subj.epochs.push_back(std::move(ep));
    }
    for (std::uint32_t e = 0; e < n_epochs; ++e) {
      cur.need(1, "labels");
      const int label = bytes[cur.pos++];
      if (label != 0 && label != 1)
        throw ChecksumMismatch("label byte is not 0 or 1");
      subj.epochs[e].label = label;
      subj.labels.push_back(label);
    }

    const std::uint32_t stored = cur.u32("block checksum");
    const std::uint32_t computed =
        crc32(bytes.data() + block_start, cur.pos - 4 - block_start);
    if (stored != computed)
      throw ChecksumMismatch("CRC32 mismatch in subject block " +
                             std::to_string(s));
    subj.seizure_events = events_from_labels(subj.labels, epoch_len_sec);
    subj.total_hours = n_epochs * epoch_len_sec / 3600.0;
    subjects.push_back(std::move(subj));
  }
  if (cur.pos != bytes.size())
    throw ChecksumMismatch("trailing bytes after the last subject block");
  return subjects;
}

}  // namespace rsel
