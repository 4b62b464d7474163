#pragma once

#include <filesystem>

#include "nlrestore/signal.hpp"

namespace nlrestore {

enum class WavBitDepth { pcm16, pcm24, float32 };

// Reads PCM 16/24-bit or IEEE float 32-bit RIFF/WAVE. Files must be mono
// unless a channel index >= 0 selects one channel of a multichannel file.
Signal read_wav(const std::filesystem::path& path, int channel = -1);

// Mono writer. float32 is lossless for doubles that originated as floats;
// integer depths clamp to [-1, 1] and quantize symmetrically (scale 2^(b-1)-1).
void write_wav(const std::filesystem::path& path, const Signal& signal,
               WavBitDepth depth = WavBitDepth::float32);

}  // namespace nlrestore
