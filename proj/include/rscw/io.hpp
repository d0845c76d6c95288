#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rscw/code.hpp"
#include "rscw/decoder.hpp"
#include "rscw/network.hpp"
#include "rscw/noise.hpp"
#include "rscw/npe.hpp"
#include "rscw/quantize.hpp"

// Binary artifact containers.  Every multi-byte integer and float is
// little-endian; bit vectors pack bit i into byte i/8 at bit position i%8.
// Parsers validate magic, version, and every declared count against the
// actual payload and throw std::runtime_error naming the file and reason.

namespace rscw {

// --------------------------------------------------------------------------
// Raw file plumbing

std::vector<std::uint8_t> load_bytes(const std::string& path);
void save_bytes(const std::string& path, const std::vector<std::uint8_t>& b);
void save_text(const std::string& path, const std::string& text);
std::string load_text(const std::string& path);

// --------------------------------------------------------------------------
// Pure-error tables ("RSCL"): 16-byte header (magic, version u16, L u16,
// type u8, zero padding), then (L^2-1)/2 rows of ceil(L^2/8) bytes.

std::vector<std::uint8_t> serialize_pure_error_table(const PureErrorTable& t);
PureErrorTable parse_pure_error_table(const std::vector<std::uint8_t>& bytes);
void save_pure_error_table(const std::string& path, const PureErrorTable& t);
PureErrorTable load_pure_error_table(const std::string& path);

// --------------------------------------------------------------------------
// Labeled sample datasets ("RSCD"): header (magic, version u16, L u16,
// T u16, three f64 noise parameters, sample count u64), then per sample the
// byte-aligned packed fields: X syndromes, Z syndromes, residual X bits,
// residual Z bits, one class-bit byte, X label syndrome, Z label syndrome.

std::vector<std::uint8_t> serialize_dataset(const Dataset& d);
Dataset parse_dataset(const std::vector<std::uint8_t>& bytes);
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

// --------------------------------------------------------------------------
// Network weights ("MTLW"): one network per file, float or int8 variant in
// the same container.  Header: magic, version u16, L u16, T u16, m u16
// (syndrome bits), layer count u16, variant u8, type u8, activation, input
// dims, conv geometries, widths, piece sizes.  Layer records follow in
// frontend-then-heads order: kind u8, dims, weight scale f32, weight
// payload (f32 or i8), bias payload (f32 or i32), rescale multiplier i32,
// shift u8.

struct NetworkFile {
  int distance = 0;
  int rounds = 0;
  bool quantized = false;
  NetworkSpec spec;
  Weights<float> weights;  // populated when !quantized
  QuantizedNetwork qnet;   // populated when quantized
};

std::vector<std::uint8_t> serialize_network(const NetworkFile& f);
NetworkFile parse_network(const std::vector<std::uint8_t>& bytes);
void save_network(const std::string& path, const NetworkFile& f);
NetworkFile load_network(const std::string& path);

// --------------------------------------------------------------------------
// Distance-3 lookup table ("L3LU"): header (magic, preset u8, T u8), then
// for each syndrome type 2^12 records of (class bit u8, packed syndrome u8,
// sample count u32).

std::vector<std::uint8_t> serialize_l3_lut(const L3Lut& lut);
L3Lut parse_l3_lut(const std::vector<std::uint8_t>& bytes);
void save_l3_lut(const std::string& path, const L3Lut& lut);
L3Lut load_l3_lut(const std::string& path);

// --------------------------------------------------------------------------
// Engine programs ("NPEP"): header (magic, version u16, machine config
// echo, record count u64), then fixed 16-byte instruction records (opcode
// u8, tap u8, three u16 slot fields, two u16 register fields, u32 memory
// address).  The file intentionally carries no parameter image: loading
// re-compiles from the caller's network under the echoed config and demands
// a byte-identical stream, so a program can never silently drift from the
// parameters it was scheduled for.

struct NpeProgramFile {
  NpeConfig config;
  std::vector<NpeInstruction> stream;
};

std::vector<std::uint8_t> serialize_npe_program(const NpeProgram& p);
NpeProgramFile parse_npe_program(const std::vector<std::uint8_t>& bytes);
void save_npe_program(const std::string& path, const NpeProgram& p);
NpeProgramFile read_npe_program(const std::string& path);
NpeProgram load_npe_program(const std::string& path, const NetworkSpec& spec,
                            const QuantizedNetwork& qnet);

}  // namespace rscw
