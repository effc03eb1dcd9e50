#pragma once

#include <string>
#include <string_view>

#include "promptsim/prompts.hpp"

namespace promptsim {

/// Newline-delimited JSON, one record per line, keys in this fixed order:
///
///   {"kind":"header","iteration":<k>,"version":1}
///   {"kind":"point","polarity":"positive","axis":null,"slice":null,"style":null,"voxels":[[i,j,k]]}
///   {"kind":"box","polarity":"positive","axis":null,"slice":null,"style":null,"voxels":[[min],[max]]}
///   {"kind":"scribble","polarity":"negative","axis":"transverse","slice":12,
///    "style":"warped_centerline","voxels":[[i,j,k],...]}
///
/// Records appear as header, points, box, scribbles; every line ends in '\n'.
std::string serialize_prompt_set(const PromptSet& set);
PromptSet parse_prompt_set(std::string_view text);

}  // namespace promptsim
