#pragma once

#include <cstdint>
#include <string>

namespace rhythmlab {

struct SynthOptions {
    int segments_per_language = 200;
    int speakers_per_language = 20;
    uint64_t seed = 0;
};

struct SynthResult {
    std::string manifest_path;
    int files = 0;
};

// Writes a three-way synthetic corpus of amplitude-modulated noise under
// out_dir (wav/ + manifest.jsonl). The classes differ only in temporal
// structure:
//   pulse5  - regular 5 Hz syllable cycles, low duration variance
//   stress4 - alternating strong/weak cycles with high duration variance
//   gap8    - fast 8 Hz cycles with frequent voiceless gaps
// Speakers differ in spectral tilt, base pitch and speaking-rate jitter.
SynthResult synthesize_corpus(const std::string& out_dir, const SynthOptions& options = {});

}  // namespace rhythmlab
