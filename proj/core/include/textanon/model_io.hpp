#pragma once

#include "textanon/crf.hpp"
#include "textanon/perceptron.hpp"

#include <filesystem>
#include <iosfwd>
#include <variant>

namespace textanon {

/// Text container, version 1:
///
///   textanon-model 1
///   kind crf|perceptron
///   <key value metadata lines>
///   features-config window=.. max_affix=.. context_shapes=.. use_pos=.. use_chunk=..
///   labels <n>            followed by n tag lines
///   features <n>          followed by n feature lines (line i = id i)
///   weights <nnz>         followed by nonzero entries:
///     e <feature> <label> <w> | t <from> <to> <w> | b <label> <w> | z <label> <w>
///   end
///
/// Doubles are written in shortest round-trip form, so save/load is exact.
void save_model(std::ostream& out, const CrfModel& model);
void save_model(std::ostream& out, const PerceptronModel& model);

using AnyModel = std::variant<CrfModel, PerceptronModel>;

/// Throws LoadError on malformed input.
AnyModel load_model(std::istream& in);
AnyModel load_model(const std::filesystem::path& path);

CrfModel load_crf(std::istream& in);
PerceptronModel load_perceptron(std::istream& in);

void save_model_file(const std::filesystem::path& path, const AnyModel& model);

}  // namespace textanon
