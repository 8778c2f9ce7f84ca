# =============================================================================
# Copyright (c) 2024 by the lc-intent authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# =============================================================================
import hashlib
import json
import os
import re
from enum import Enum
from importlib import import_module
from pathlib import Path
from typing import Any

import numpy as np


class TemplateResolver:
    """
    This class realizes the logic to resolve templates in strings of configuration
    files. Only environment variables can be resolved, e.g. ``$(env:LC_INTENT_DATA)/corpus``.

    :param left_template_boundary: the start of the template
    :param right_template_boundary: the end of the template
    """

    def __init__(self, left_template_boundary: str = "$(", right_template_boundary: str = ")"):

        self.template_pattern = re.escape(left_template_boundary) + r'.*?' + re.escape(right_template_boundary)
        """
        Regex to find the template pattern
        """

        self.env_var_pattern = r'(?<=' + re.escape(left_template_boundary) + r'env:)' \
                               r'(.*?)(?=' + re.escape(right_template_boundary) + r')'
        """
        Regex to find the env var specifier pattern in the template pattern
        """

    def resolve(self, lookup_object):
        """
        This method recursively resolves template strings in either a dict or list
        or a plain string. Unresolvable environment variables are replaced by an
        empty string.

        :param lookup_object: input object, where the resolution shall take place
        :return: the modified object
        """

        if isinstance(lookup_object, dict):
            return {key: self.resolve(value) for key, value in lookup_object.items()}
        elif isinstance(lookup_object, list):
            return [self.resolve(element) for element in lookup_object]
        elif isinstance(lookup_object, str):
            resolved_string = lookup_object

            for template_match in re.findall(self.template_pattern, lookup_object):
                resolved = None

                env_var_matches = re.findall(self.env_var_pattern, template_match)

                if 0 < len(env_var_matches):
                    resolved = os.getenv(env_var_matches[0])

                resolved_string = resolved_string.replace(template_match, "" if resolved is None else resolved)

            return resolved_string
        else:
            return lookup_object


def convert_to_dict(obj: Any) -> Any:
    """
    This method converts an object recursively to plain JSON compatible values. Numpy
    scalars and arrays are converted to python numbers and lists, enums to their values,
    objects with a ``to_dict`` method are converted via that method.

    :param obj: any object that can be converted to dict
    :return: resulted dict or the object, if no valid conversion available (necessary due to the recursion)
    """

    if isinstance(obj, np.ndarray):
        return convert_to_dict(obj.tolist())
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, Enum):
        return obj.value
    elif isinstance(obj, (list, tuple)):
        return [convert_to_dict(item) for item in obj]
    elif isinstance(obj, dict):
        return {str(key): convert_to_dict(value) for key, value in obj.items()}
    elif isinstance(obj, Path):
        return str(obj)
    elif hasattr(obj, "to_dict"):
        return convert_to_dict(obj.to_dict())
    elif hasattr(obj, '__dict__'):
        return {key: convert_to_dict(value) for key, value in obj.__dict__.items()}
    else:
        return obj


def is_type_allowed(obj, allowed_types: tuple) -> bool:
    """
    This convenience function checks if the type of the provided object is allowed given
    the tuple of allowed types provided as argument.

    :param obj: object to check
    :param allowed_types: allowed types

    :return: True if allowed, False otherwise
    """

    if not isinstance(obj, allowed_types):
        return False

    if isinstance(obj, (list, tuple, set)):
        return all(is_type_allowed(item, allowed_types) for item in obj)
    elif isinstance(obj, dict):
        return all(is_type_allowed(value, allowed_types) for value in obj.values())

    return True


def dump_json(obj: Any) -> str:
    """
    Canonical JSON representation of result artifacts. Keys are sorted, so two runs
    with identical content produce byte-identical files.
    """

    return json.dumps(convert_to_dict(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj: Any, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dump_json(obj), encoding="utf-8")
    return target


def read_json(path: str | Path) -> Any:
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"File not found: {source}")

    return json.loads(source.read_text(encoding="utf-8"))


def sha256_digest(*arrays: np.ndarray) -> str:
    """
    Digest over the raw bytes of the provided arrays, used as checksum of
    fold assignments and sample tables in manifests.
    """

    digest = hashlib.sha256()
    for array in arrays:
        contiguous = np.ascontiguousarray(array)
        digest.update(str(contiguous.dtype).encode())
        digest.update(str(contiguous.shape).encode())
        digest.update(contiguous.tobytes())

    return digest.hexdigest()


def load_class_by_name(class_name: str) -> type:
    """
    This method loads a class given its name by traversing its module path up
    to the class itself. It is used to resolve the model registry lazily, so that
    a model family is imported only if it is requested.
    """

    if 0 > class_name.find("."):
        raise ValueError(f"Class loading error. Invalid class specifier: {class_name}; "
                         f"Class specifier must be composed of PACKAGE_NAME.MODULE_NAME.CLASS_NAME")

    loaded = None
    for segment in class_name.split("."):
        if loaded is None:
            loaded = import_module(segment)
        else:
            if hasattr(loaded, segment):
                loaded = getattr(loaded, segment)
            else:
                try:
                    loaded = import_module(loaded.__name__ + "." + segment)
                except ModuleNotFoundError:
                    raise AttributeError(f"Class not found: {loaded.__name__}.{segment}")

    if not isinstance(loaded, type):
        raise TypeError(f"Specified class name results in a non-type: {loaded}")

    return loaded
