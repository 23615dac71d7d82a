#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "corl/errors.hpp"
#include "corl/rng.hpp"

namespace corl {

using Vec = Eigen::VectorXd;

enum class InitMode { Random, Fixed };

struct Step {
    Vec state;
    Vec action;
    double reward = 0.0;
    bool done = false;
};

/// One recorded trajectory. `done` is true only on the final step; rewards
/// are 0/1 in all shipped environments.
struct Episode {
    std::string env_id;
    InitMode init_mode = InitMode::Random;
    std::vector<Step> steps;
    bool success = false;

    int length() const { return static_cast<int>(steps.size()); }
};

/// A training window of h consecutive actions starting at step t, with all
/// intermediate states s_t..s_{t+h} so every prefix target is computable.
/// Positions past the episode end are padded: zero action, zero reward,
/// saturated done_mask, repeated terminal state.
struct ChunkSample {
    std::vector<Vec> states;        // h+1 entries
    std::vector<Vec> actions;       // h entries
    std::vector<double> rewards;    // h entries
    std::vector<bool> done_mask;    // h entries; done_mask[i] <=> terminated at or before t+i
    double mc_return = 0.0;         // discounted return-to-go from s_t
    int valid_len = 0;              // number of real (unpadded) actions
};

struct OfflineDataset {
    std::string env_id;
    int S = 0;
    int A = 0;
    int h = 1;
    double gamma = 0.99;
    std::vector<Episode> episodes;
    std::vector<ChunkSample> chunks;  // derived via make_chunks
    std::string warning;              // e.g. low expert success rate at collection

    int num_chunks() const { return static_cast<int>(chunks.size()); }

    /// Builds the derived chunk list from `episodes`.
    void rebuild_chunks();
};

/// out[t] = sum_k gamma^k * reward[t+k], computed by backward recursion.
std::vector<double> mc_return_to_go(const Episode& episode, double gamma);

/// One ChunkSample per step of the episode (windows at every t, padded past
/// the terminal step). Throws DataError on an empty episode or h < 1.
std::vector<ChunkSample> make_chunks(const Episode& episode, int h, double gamma);

void save_dataset(const OfflineDataset& dataset, const std::string& path);
OfflineDataset load_dataset(const std::string& path);

/// Uniform-with-replacement chunk indices; deterministic given the stream.
std::vector<int> sample_batch_indices(const OfflineDataset& dataset, int batch_size, RngStream& rng);

std::vector<const ChunkSample*> sample_batch(const OfflineDataset& dataset, int batch_size, RngStream& rng);

const char* init_mode_name(InitMode mode);
InitMode init_mode_from_name(const std::string& name);

/// Doubles rendered as decimal text with 17 significant digits.
std::string format_double(double v);

}  // namespace corl
