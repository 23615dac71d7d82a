#pragma once

#include <string>
#include <vector>

#include "corl/nn/tape.hpp"

namespace corl::nn {

/// Fully connected stack; dims = {in, hidden..., out}. GELU on hidden
/// layers, linear output. Parameters are named "<prefix>.l<i>.W" / ".b".
struct MlpSpec {
    std::string prefix;
    std::vector<int> dims;
};

void init_mlp(ParamSet& ps, const MlpSpec& spec, RngStream& rng);
int mlp_forward(Tape& t, const ParamSet& ps, const MlpSpec& spec, int x, bool trainable);

/// Single-head residual attention block: x + proj(attn(x)) followed by a
/// GELU feed-forward residual. Parameters live under "<prefix>.".
void init_attention_block(ParamSet& ps, const std::string& prefix, int width, RngStream& rng);
int attention_block_forward(Tape& t, const ParamSet& ps, const std::string& prefix, int x, int T,
                            bool causal, bool trainable);

}  // namespace corl::nn
