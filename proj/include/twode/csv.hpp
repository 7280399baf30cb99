// CSV serialization for datasets, latent tables and result rows. All floats
// carry 17 significant digits so files round-trip bit-exactly.

#ifndef TWODE_CSV_HPP
#define TWODE_CSV_HPP

#include <cstdint>
#include <string>

#include "twode/types.hpp"

namespace twode::csv {

std::string format_double(double value);  // %.17g

// dataset.csv: traj,t,o1..o_d,action[,action2],reward
void write_dataset(const std::string& path, const Dataset& data);
// The final transition target of each trajectory is not representable in the
// grid; reloaded datasets mark it unavailable.
Dataset load_dataset(const std::string& path);

// latents_u.csv: traj,u ; latents_w.csv: t,w ;
// latents_tumor.csv: traj,group,rho,K,beta_c,alpha,beta
void write_latents(const std::string& dir, const LatentTable& latents);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_hash(const std::string& path);
std::string text_hash(const std::string& text);

}  // namespace twode::csv

#endif  // TWODE_CSV_HPP
