#include "acmia/baselines.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acmia/error.hpp"
#include "acmia/tsp.hpp"

namespace acmia {
namespace {

double chosen(const SampleTrace& trace, std::size_t i) {
  const auto& lp = trace.steps[i].chosen_logprob;
  if (!lp) {
    throw Error(ErrorKind::MissingLogprob, "trace '" + trace.id + "' step " + std::to_string(i) +
                                               " has no chosen_logprob");
  }
  return *lp;
}

void require_token_level(const SampleTrace& trace) {
  if (trace.fidelity == Fidelity::lossgrid) {
    throw Error(ErrorKind::MissingLogprob, "trace '" + trace.id + "' has no per-token log-probabilities");
  }
}

double mean_of_smallest(std::vector<double> values, double k_percent) {
  const std::size_t count = min_k_count(values.size(), k_percent);
  std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(count), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += values[i];
  return sum / static_cast<double>(count);
}

}  // namespace

FrequencyTable FrequencyTable::from_counts(std::span<const std::uint64_t> counts, double smoothing) {
  if (counts.empty()) throw Error(ErrorKind::InvalidArgument, "frequency table needs a vocabulary");
  if (!(smoothing > 0.0)) throw Error(ErrorKind::InvalidArgument, "smoothing must be positive");
  long double total = 0.0L;
  for (auto c : counts) total += static_cast<long double>(c);
  const long double denom = total + static_cast<long double>(smoothing) * counts.size();

  FrequencyTable table;
  table.smoothing_ = smoothing;
  table.freq_.reserve(counts.size());
  for (auto c : counts) {
    table.freq_.push_back(static_cast<double>((static_cast<long double>(c) + smoothing) / denom));
  }
  return table;
}

double FrequencyTable::probability(std::uint32_t token_id) const {
  if (token_id >= freq_.size()) {
    throw Error(ErrorKind::VocabMismatch, "token id " + std::to_string(token_id) +
                                              " outside frequency table of " + std::to_string(freq_.size()));
  }
  return freq_[token_id];
}

void validate(const BaselineParams& params) {
  if (!(params.k_percent > 0.0 && params.k_percent <= 100.0)) {
    throw Error(ErrorKind::InvalidArgument, "k_percent must lie in (0, 100]");
  }
  if (!(params.dcpdd_bound_a >= 0.0)) throw Error(ErrorKind::InvalidArgument, "DC-PDD bound must be >= 0");
  if (params.compression_level < 0 || params.compression_level > 9) {
    throw Error(ErrorKind::InvalidArgument, "compression level must be 0-9");
  }
}

std::size_t min_k_count(std::size_t steps, double k_percent) {
  // The epsilon keeps k*T/100 values that are integral in exact arithmetic
  // from being rounded up one step by floating-point error.
  const double raw = std::ceil(k_percent * static_cast<double>(steps) / 100.0 - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, std::max<std::size_t>(steps, 1));
}

double score_loss(const SampleTrace& trace) { return -sample_loss(trace, false); }

double score_minkpct(const SampleTrace& trace, const BaselineParams& params) {
  validate(params);
  require_token_level(trace);
  std::vector<double> logprobs(trace.steps.size());
  for (std::size_t i = 0; i < trace.steps.size(); ++i) logprobs[i] = chosen(trace, i);
  if (params.k_percent == 100.0) return score_loss(trace);
  return mean_of_smallest(std::move(logprobs), params.k_percent);
}

double score_minkpp(const SampleTrace& trace, const BaselineParams& params) {
  validate(params);
  if (trace.fidelity != Fidelity::full) {
    throw Error(ErrorKind::WrongFidelity, "trace '" + trace.id + "' is " +
                                              std::string(to_string(trace.fidelity)) + ", Min-K%++ needs full");
  }
  std::vector<double> z_scores(trace.steps.size());
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TokenStep& step = trace.steps[i];
    const TspContext ctx = tsp_context(*step.logits, 1.0);
    z_scores[i] = (log_tsp_at(ctx, step.token_id) - ctx.mu) / std::max(ctx.sigma, kSigmaFloor);
  }
  return mean_of_smallest(std::move(z_scores), params.k_percent);
}

std::size_t zlib_compressed_size(std::string_view data, int level) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  std::vector<Bytef> buffer(bound);
  const int rc = compress2(buffer.data(), &bound, reinterpret_cast<const Bytef*>(data.data()),
                           static_cast<uLong>(data.size()), level);
  if (rc != Z_OK) throw Error(ErrorKind::InvalidArgument, "zlib compress2 failed with code " + std::to_string(rc));
  return static_cast<std::size_t>(bound);
}

double score_compression(const SampleTrace& trace, const BaselineParams& params) {
  validate(params);
  if (!trace.text) throw Error(ErrorKind::MissingText, "trace '" + trace.id + "' has no text");
  if (trace.text->empty()) throw Error(ErrorKind::EmptyCompression, "trace '" + trace.id + "' has empty text");
  const double steps = static_cast<double>(trace.steps.size());
  const double total_nll = sample_loss(trace, false) * steps;
  const auto compressed = zlib_compressed_size(*trace.text, params.compression_level);
  return -total_nll / static_cast<double>(compressed);
}

double score_lowercase(double loss_original, double loss_lowercased) {
  if (!(loss_original > 0.0)) throw Error(ErrorKind::ZeroOriginalLoss, "original loss must be positive");
  return loss_lowercased / loss_original;
}

double score_ref(double loss_target, double loss_reference) {
  if (!std::isfinite(loss_target) || !std::isfinite(loss_reference)) {
    throw Error(ErrorKind::InvalidArgument, "losses must be finite");
  }
  return loss_reference - loss_target;
}

double score_dcpdd(const SampleTrace& trace, const FrequencyTable& table, const BaselineParams& params) {
  validate(params);
  require_token_level(trace);
  const auto positions = fos_positions(trace);
  double sum = 0.0;
  for (std::size_t i : positions) {
    const TokenStep& step = trace.steps[i];
    if (step.logits && step.logits->size() != table.vocab_size()) {
      throw Error(ErrorKind::VocabMismatch, "trace '" + trace.id + "' vocabulary differs from frequency table");
    }
    const double p_model = std::exp(chosen(trace, i));
    const double p_ref = table.probability(step.token_id);
    sum += std::min(-p_model * std::log(p_ref), params.dcpdd_bound_a);
  }
  return sum / static_cast<double>(positions.size());
}

namespace {

char32_t lower_code_point(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c == 0x130) return U'i';
  if (c == 0x178) return 0xFF;
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) return (c % 2 == 0) ? c + 1 : c;
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 0x25;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 0x3F;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if ((c >= 0x460 && c <= 0x481) || (c >= 0x48A && c <= 0x4BF)) return (c % 2 == 0) ? c + 1 : c;
  return c;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

}  // namespace

std::string simple_lowercase(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) {
    const auto lead = static_cast<unsigned char>(utf8[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead >> 5) == 0x6) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead >> 4) == 0xE) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead >> 3) == 0x1E) {
      len = 4;
      cp = lead & 0x07;
    }
    bool valid = len > 0 && i + len <= utf8.size();
    for (std::size_t j = 1; valid && j < len; ++j) {
      const auto cont = static_cast<unsigned char>(utf8[i + j]);
      if ((cont >> 6) != 0x2) valid = false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!valid) {
      // Malformed byte: copy through untouched.
      out.push_back(utf8[i]);
      ++i;
      continue;
    }
    append_utf8(out, lower_code_point(cp));
    i += len;
  }
  return out;
}

}  // namespace acmia
