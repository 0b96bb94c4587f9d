#pragma once

#include <map>
#include <string>
#include <vector>

#include "tdmi/tensor.hpp"

namespace tdmi {

// Tensor archive: a flat binary file of records
//   <u32 name length><name bytes><u32 rank><u32 shape ints><f32 data, little endian>
// plus a text manifest "<path>.manifest" listing "name d0xd1x..." per line.
struct ArchiveEntry {
    Shape shape;
    std::vector<float> data;
};

using Archive = std::map<std::string, ArchiveEntry>;

void write_archive(const std::string& path, const Archive& archive);
Archive read_archive(const std::string& path);

template <typename T>
ArchiveEntry to_entry(const Tensor<T>& t) {
    ArchiveEntry e;
    e.shape = t.shape();
    e.data.assign(t.values().begin(), t.values().end());
    return e;
}

template <typename T>
void load_entry(const ArchiveEntry& e, Tensor<T>& t) {
    if (e.shape != t.shape())
        throw ShapeError("archive entry shape " + shape_str(e.shape) + " does not match tensor " +
                         shape_str(t.shape()));
    for (std::size_t i = 0; i < e.data.size(); ++i) t.values()[i] = static_cast<T>(e.data[i]);
}

} // namespace tdmi
