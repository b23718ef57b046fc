#include "widur/csi_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace widur {

namespace {

const std::array<std::string, kNumClasses> kLabelNames = {
    "empty", "sit", "dress", "undress", "other"};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t pos = text.find('\n', start);
    if (pos == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return lines;
}

std::string expected_trace_header() {
  std::string h = "timestamp_s";
  for (int i = 0; i < kNumSubcarriers; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), ",sc%02d", i);
    h += buf;
  }
  return h;
}

}  // namespace

const std::string& label_name(Label l) { return kLabelNames[static_cast<int>(l)]; }

Label parse_label(const std::string& name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kLabelNames[i] == name) return static_cast<Label>(i);
  }
  throw UnknownLabel("'" + name + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw NonFiniteValue("cannot parse '" + s + "' at " + context);
  }
  if (!std::isfinite(v)) throw NonFiniteValue("non-finite value at " + context);
  return v;
}

void CsiTrace::validate() const {
  if (frames.empty()) throw EmptyInput("trace has no frames");
  if (manifest.sampling_rate_hz <= 0) throw InvalidConfig("sampling_rate_hz must be > 0");
  if (manifest.carrier_freq_ghz <= 0) throw InvalidConfig("carrier_freq_ghz must be > 0");
  const double dt = 1.0 / manifest.sampling_rate_hz;
  for (size_t i = 0; i < frames.size(); ++i) {
    if (!std::isfinite(frames[i].timestamp_s)) {
      throw NonFiniteValue("timestamp at frame " + std::to_string(i));
    }
    for (double a : frames[i].amplitudes) {
      if (!std::isfinite(a) || a < 0) {
        throw NonFiniteValue("amplitude at frame " + std::to_string(i));
      }
    }
    if (i > 0) {
      const double gap = frames[i].timestamp_s - frames[i - 1].timestamp_s;
      if (gap <= 0) {
        throw NonMonotonicTimestamp("frame " + std::to_string(i));
      }
      if (gap < 0.8 * dt || gap > 1.2 * dt) {
        throw InvalidConfig("frame spacing " + format_double(gap) + " at frame " +
                            std::to_string(i) + " outside 20% jitter of " + format_double(dt));
      }
    }
  }
}

std::vector<double> CsiTrace::subcarrier_series(int sc) const {
  std::vector<double> out(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) out[i] = frames[i].amplitudes[sc];
  return out;
}

CsiTrace parse_trace(const std::string& csv_text, const std::string& manifest_text) {
  CsiTrace trace;

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(manifest_text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeader(std::string("manifest JSON: ") + e.what());
  }
  try {
    trace.manifest.sampling_rate_hz = j.at("sampling_rate_hz").get<double>();
    trace.manifest.carrier_freq_ghz = j.at("carrier_freq_ghz").get<double>();
    trace.manifest.domain_id = j.at("domain_id").get<std::string>();
    trace.manifest.trace_id = j.at("trace_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedHeader(std::string("manifest fields: ") + e.what());
  }

  auto lines = split_lines(csv_text);
  if (lines.empty() || lines[0] != expected_trace_header()) {
    throw MalformedHeader("trace CSV header must be '" + expected_trace_header() + "'");
  }
  double prev_ts = -1.0;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;  // trailing newline
    auto fields = split(lines[li], ',');
    if (fields.size() != kNumSubcarriers + 1) {
      throw MalformedHeader("row " + std::to_string(li + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(kNumSubcarriers + 1));
    }
    CsiFrame frame;
    const std::string ctx = "row " + std::to_string(li + 1);
    frame.timestamp_s = parse_double(fields[0], ctx);
    if (li > 1 && frame.timestamp_s <= prev_ts) {
      throw NonMonotonicTimestamp(ctx);
    }
    prev_ts = frame.timestamp_s;
    for (int sc = 0; sc < kNumSubcarriers; ++sc) {
      double a = parse_double(fields[sc + 1], ctx);
      if (a < 0) throw NonFiniteValue("negative amplitude at " + ctx);
      frame.amplitudes[sc] = a;
    }
    trace.frames.push_back(frame);
  }
  if (trace.frames.empty()) throw EmptyInput("trace CSV has no data rows");
  return trace;
}

std::pair<std::string, std::string> write_trace(const CsiTrace& trace) {
  std::string csv = expected_trace_header();
  csv += '\n';
  for (const auto& f : trace.frames) {
    csv += format_double(f.timestamp_s);
    for (double a : f.amplitudes) {
      csv += ',';
      csv += format_double(a);
    }
    csv += '\n';
  }
  nlohmann::ordered_json j;
  j["sampling_rate_hz"] = trace.manifest.sampling_rate_hz;
  j["carrier_freq_ghz"] = trace.manifest.carrier_freq_ghz;
  j["domain_id"] = trace.manifest.domain_id;
  j["trace_id"] = trace.manifest.trace_id;
  return {csv, j.dump(2) + "\n"};
}

std::vector<LabeledInterval> parse_labels(const std::string& csv_text, const CsiTrace& trace) {
  auto lines = split_lines(csv_text);
  if (lines.empty() || lines[0] != "start_idx,end_idx,label") {
    throw MalformedHeader("labels CSV header must be 'start_idx,end_idx,label'");
  }
  std::vector<LabeledInterval> out;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    auto fields = split(lines[li], ',');
    if (fields.size() != 3) {
      throw MalformedHeader("labels row " + std::to_string(li + 1));
    }
    LabeledInterval iv;
    iv.start_idx = std::stoull(fields[0]);
    iv.end_idx = std::stoull(fields[1]);
    iv.label = parse_label(fields[2]);
    if (iv.start_idx >= iv.end_idx || iv.end_idx > trace.frames.size()) {
      throw IntervalOutOfRange("row " + std::to_string(li + 1) + ": [" + fields[0] + "," +
                               fields[1] + ") on trace of " +
                               std::to_string(trace.frames.size()) + " frames");
    }
    out.push_back(iv);
  }
  auto sorted = out;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.start_idx < b.start_idx; });
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start_idx < sorted[i - 1].end_idx) {
      throw OverlappingIntervals("[" + std::to_string(sorted[i - 1].start_idx) + "," +
                                 std::to_string(sorted[i - 1].end_idx) + ") and [" +
                                 std::to_string(sorted[i].start_idx) + "," +
                                 std::to_string(sorted[i].end_idx) + ")");
    }
  }
  return out;
}

std::string write_labels(const std::vector<LabeledInterval>& intervals) {
  std::string csv = "start_idx,end_idx,label\n";
  for (const auto& iv : intervals) {
    csv += std::to_string(iv.start_idx) + ',' + std::to_string(iv.end_idx) + ',' +
           label_name(iv.label) + '\n';
  }
  return csv;
}

}  // namespace widur
