#pragma once

// Flat key=value hyperparameter files for the train command.
//
//   # comment
//   stages = 2
//   learning_rate = 0.01          # both stage kinds
//   refinement.learning_rate = 0.005
//
// Keys: stages, input_size, input_channels, sigma, crops_per_joint,
// translations, jitter, flips, and the training keys batch_size,
// learning_rate, dropout_keep, epochs, seed. Training keys and flips may
// carry a "stage1." or "refinement." prefix to target one stage kind.

#include <istream>
#include <string>

#include "posecascade/cascade.hpp"

namespace posecascade::cli {

// Throws ParseError for malformed lines or values and ValidationError for
// unknown keys.
void apply_config(std::istream& is, const std::string& source,
                  CascadeConfig& config);

// Sets one key; the same rules as a config line.
void apply_config_value(const std::string& key, const std::string& value,
                        CascadeConfig& config);

// Round-trips through apply_config.
void write_config(std::ostream& os, const CascadeConfig& config);

}  // namespace posecascade::cli
