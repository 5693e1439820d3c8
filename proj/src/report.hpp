#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "brownscene/estimators.hpp"
#include "brownscene/identities.hpp"
#include "brownscene/local_time.hpp"
#include "brownscene/process.hpp"
#include "brownscene/scenery.hpp"

namespace brownscene::harness {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

/// Creates `dir` (and parents); IoError if that fails.
std::filesystem::path ensure_directory(const std::string& dir);

/// Writes `content` to `file`, replacing it; IoError on failure.
void write_text(const std::filesystem::path& file, const std::string& content);

std::string path_csv(const PathSample& path);                  // t,y
std::string local_time_csv(const LocalTimeField& field);       // t,x,L (occupied bins only)
std::string delta_csv(const DeltaPath& delta);                 // t,delta,running_sup,cond_var
std::string persistence_csv(const PersistenceEstimate& e);
std::string molchan_csv(const MolchanEstimate& m);
std::string tails_csv(const TailReport& r);

json spec_json(const ProcessSpec& spec);
json persistence_json(const PersistenceEstimate& e);
json molchan_json(const MolchanEstimate& m);
json envelope_json(const TailEnvelopeResult& r);
json tails_json(const TailReport& r);
json maximal_json(const MaximalInequalityReport& r);
json slepian_json(const SlepianReport& r);
json identity_json(const IdentityTest& t);

/// Band used by the persistence verdict: slope within +-0.08 of -gamma/2.
inline constexpr double kSlopeBand = 0.08;

}  // namespace brownscene::harness
