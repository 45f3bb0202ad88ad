#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <variant>

#include "forktms/volume/volume.hpp"

namespace forktms::volume {

enum class ElementKind { Scalar, Label };

// Contents of the key/value sidecar written next to every payload:
//   dims=nx,ny,nz
//   spacing=sx,sy,sz
//   kind=scalar|label
//   order=little-endian,x-fastest
struct Header {
  Dims dims;
  Spacing spacing;
  ElementKind kind = ElementKind::Scalar;
};

/// `<payload>.hdr`
std::filesystem::path header_path_for(const std::filesystem::path& payload);

Header parse_header(const std::string& text);
std::string format_header(const Header& header);

using AnyVolume = std::variant<ScalarVolume, LabelVolume>;

AnyVolume load_volume(const std::filesystem::path& payload, const std::filesystem::path& header);
AnyVolume load_volume(const std::filesystem::path& payload);
ScalarVolume load_scalar(const std::filesystem::path& payload);
LabelVolume load_label(const std::filesystem::path& payload);

void save_volume(const std::filesystem::path& payload, const ScalarVolume& v);
void save_volume(const std::filesystem::path& payload, const LabelVolume& v);

/// Observer invoked with every payload path the loaders open. Used by the
/// pipeline tests to audit which files a stage touches. Pass an empty
/// function to clear.
void set_read_observer(std::function<void(const std::filesystem::path&)> observer);

}  // namespace forktms::volume
