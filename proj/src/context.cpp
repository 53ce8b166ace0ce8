#include "becv/context.hpp"

#include <algorithm>
#include <cmath>

#include "becv/error.hpp"
#include "becv/motion.hpp"

namespace becv {

namespace {

// Softmax of each channel over spatial positions, in double precision.
std::vector<double> position_softmax(const Tensor& t) {
  const std::size_t n = t.plane_size();
  std::vector<double> out(t.size());
  for (int c = 0; c < t.channels(); ++c) {
    auto src = t.plane(c);
    const float peak = *std::ranges::max_element(src);
    double total = 0.0;
    double* dst = out.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) total += dst[i] = std::exp(static_cast<double>(src[i] - peak));
    for (std::size_t i = 0; i < n; ++i) dst[i] /= total;
  }
  return out;
}

// Softmax over channels at one spatial position.
void channel_softmax(const Tensor& t, std::size_t pos, std::vector<double>& out) {
  const int C = t.channels();
  const std::size_t n = t.plane_size();
  auto v = t.data();
  float peak = v[pos];
  for (int c = 1; c < C; ++c) peak = std::max(peak, v[c * n + pos]);
  double total = 0.0;
  out.resize(C);
  for (int c = 0; c < C; ++c) total += out[c] = std::exp(static_cast<double>(v[c * n + pos] - peak));
  for (int c = 0; c < C; ++c) out[c] /= total;
}

std::string where(int time, int scale) {
  return "reference t=" + std::to_string(time) + " at scale " + std::to_string(scale);
}

}  // namespace

Tensor embed_query(const Tensor& source, const AttentionParams& params) {
  return conv2d(source, params.query, 1, ConvKind::pointwise);
}

KeyValue embed_reference(const Tensor& feature, const AttentionParams& params) {
  const Tensor h = forward(params.reference, feature);
  return {conv2d(h, params.key, 1, ConvKind::pointwise), conv2d(h, params.value, 1, ConvKind::pointwise)};
}

Tensor attend(const Tensor& query, const KeyValue& kv) {
  const Tensor& key = kv.key;
  const Tensor& value = kv.value;
  if (key.height() != value.height() || key.width() != value.width()) {
    throw ShapeError("key " + key.shape_string() + " and value " + value.shape_string() + " differ spatially");
  }
  if (query.channels() != key.channels()) {
    throw ShapeError("query " + query.shape_string() + " and key " + key.shape_string() + " differ in channels");
  }
  const int D = key.channels();
  const int Dv = value.channels();
  const std::size_t n = key.plane_size();

  const std::vector<double> ks = position_softmax(key);
  // D x Dv summary of the reference; this is what makes the cost linear in positions.
  std::vector<double> summary(static_cast<std::size_t>(D) * Dv, 0.0);
  for (int c = 0; c < D; ++c) {
    const double* kc = ks.data() + c * n;
    for (int d = 0; d < Dv; ++d) {
      auto vd = value.plane(d);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += kc[i] * vd[i];
      summary[static_cast<std::size_t>(c) * Dv + d] = acc;
    }
  }

  Tensor out(Dv, query.height(), query.width());
  const std::size_t nq = query.plane_size();
  std::vector<double> qs;
  for (std::size_t p = 0; p < nq; ++p) {
    channel_softmax(query, p, qs);
    for (int d = 0; d < Dv; ++d) {
      double acc = 0.0;
      for (int c = 0; c < D; ++c) acc += qs[c] * summary[static_cast<std::size_t>(c) * Dv + d];
      out.data()[d * nq + p] = static_cast<float>(acc);
    }
  }
  return out;
}

std::vector<Tensor> linear_attention(const Tensor& query_source, std::span<const Tensor> references,
                                     const AttentionParams& params) {
  const Tensor q = embed_query(query_source, params);
  std::vector<Tensor> out;
  out.reserve(references.size());
  for (const Tensor& ref : references) out.push_back(attend(q, embed_reference(ref, params)));
  return out;
}

std::vector<float> similarity_row(const Tensor& query, const Tensor& key, int pos) {
  if (query.channels() != key.channels()) throw ShapeError("similarity_row: channel mismatch");
  if (pos < 0 || static_cast<std::size_t>(pos) >= query.plane_size()) {
    throw Error("similarity_row: query position out of range");
  }
  std::vector<double> qs;
  channel_softmax(query, static_cast<std::size_t>(pos), qs);
  const std::vector<double> ks = position_softmax(key);
  const std::size_t n = key.plane_size();
  std::vector<float> row(n);
  for (std::size_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (int c = 0; c < key.channels(); ++c) acc += qs[c] * ks[c * n + m];
    row[m] = static_cast<float>(acc);
  }
  return row;
}

std::vector<ContextEntry> extract_local(int scale, std::span<const ReferenceInput> refs) {
  std::vector<ContextEntry> out;
  for (const ReferenceInput& r : refs) {
    if (!role_active(r.role, scale)) continue;
    if (r.feature == nullptr) throw Error("missing feature for " + where(r.time, scale));
    if (r.flow == nullptr) throw Error("missing motion for " + where(r.time, scale));
    out.push_back({r.role, r.time, warp_bilinear(*r.feature, flow_at_scale(*r.flow, scale))});
  }
  return out;
}

std::vector<ContextEntry> extract_nonlocal(const Tensor& current, int scale,
                                           std::span<const ReferenceInput> refs,
                                           const AttentionParams& params) {
  const Tensor q = embed_query(current, params);
  std::vector<ContextEntry> out;
  for (const ReferenceInput& r : refs) {
    if (!role_active(r.role, scale)) continue;
    if (r.kv != nullptr) {
      out.push_back({r.role, r.time, attend(q, *r.kv)});
    } else if (r.feature != nullptr) {
      out.push_back({r.role, r.time, attend(q, embed_reference(*r.feature, params))});
    } else {
      throw Error("missing feature for " + where(r.time, scale));
    }
  }
  return out;
}

FlowField refine_flow(const FlowField& flow, const ConvWeights& refine) {
  return FlowField(conv2d(flow.tensor(), refine, 1, ConvKind::pointwise));
}

}  // namespace becv
