// SPDX-License-Identifier: Apache-2.0
#include "varembed/error.hpp"
#include "varembed/textcorpus.hpp"

namespace varembed::textcorpus {

namespace {

struct Layout {
  std::size_t stripe = 0;        // tokens per stripe
  std::size_t full_windows = 0;  // windows of exactly bptt_length inputs
  std::size_t tail = 0;          // inputs in the trailing short window (0 if none/dropped)
};

Layout layout(std::size_t n, const BatchPlan& plan) {
  if (plan.batch_size == 0 || plan.bptt_length == 0) {
    throw InputError("batch_size and bptt_length must be at least 1");
  }
  if (n == 0) throw InputError("cannot batch an empty token stream");
  Layout l;
  l.stripe = n / plan.batch_size;
  if (l.stripe < 2) {
    throw InputError("stream of " + std::to_string(n) + " tokens is too short for " +
                     std::to_string(plan.batch_size) + " stripes");
  }
  const std::size_t predictable = l.stripe - 1;
  l.full_windows = predictable / plan.bptt_length;
  if (!plan.drop_remainder) l.tail = predictable % plan.bptt_length;
  if (plan.drop_remainder && l.full_windows == 0) {
    throw InputError("stream of " + std::to_string(n) + " tokens is shorter than batch_size × (bptt_length + 1)");
  }
  return l;
}

}  // namespace

std::size_t batch_remainder(std::size_t stream_size, const BatchPlan& plan) {
  const Layout l = layout(stream_size, plan);
  const std::size_t used = plan.batch_size * (l.full_windows * plan.bptt_length + l.tail);
  return stream_size - used;
}

std::vector<Window> iterate_batches(const TokenStream& stream, const BatchPlan& plan) {
  const Layout l = layout(stream.size(), plan);
  std::vector<Window> windows;
  const std::size_t count = l.full_windows + (l.tail > 0 ? 1 : 0);
  for (std::size_t w = 0; w < count; ++w) {
    Window win;
    win.batch_size = plan.batch_size;
    win.length = w < l.full_windows ? plan.bptt_length : l.tail;
    const std::size_t offset = w * plan.bptt_length;
    win.inputs.reserve(win.batch_size * win.length);
    for (std::size_t b = 0; b < plan.batch_size; ++b) {
      for (std::size_t t = 0; t < win.length; ++t) {
        const std::size_t pos = b * l.stripe + offset + t;
        win.inputs.push_back(stream.tokens[pos]);
        win.targets.push_back(stream.tokens[pos + 1]);
        win.positions.push_back(pos);
      }
    }
    windows.push_back(std::move(win));
  }
  return windows;
}

}  // namespace varembed::textcorpus
