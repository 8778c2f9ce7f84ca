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
from __future__ import annotations
from types import GenericAlias
from typing import Generic, TypeVar, Type, Any, Callable, Optional

from lcintent.core.commons.utils import is_type_allowed

allowed_param_types = (str, int, float, bool, list, dict, type(None))


ParameterType = TypeVar("ParameterType")


class ConfigValidationError(Exception):
    """
    Raised, if a configuration value is missing, has an invalid type or violates
    a constraint of its parameter. The offending key is available via ``key``.
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key: str = key


class ExpectedParameter(Generic[ParameterType]):
    """
    This is a descriptor class, which describes a configuration parameter. To do that
    you need to describe the parameter on class level of a
    :class:`Config <lcintent.core.specs.configs.Config>` then you need to refer with
    the same name as instance variable. Usage:

    .. code-block:: python

       class SmoothingConfig(Config):
           max_frame_gap = OptionalParameter(int, default=1, validator=lambda v: v >= 1)
           ma_window_seconds = OptionalParameter(float, default=0.5, validator=lambda v: v > 0)

    Integers are accepted for float parameters and converted, since configuration
    files do not distinguish ``1`` from ``1.0``.

    :param required: true, if parameter required, false if not
    :param parameter_type: (str, int, float, bool, list, dict, type(None))
    :param default: value used, if the parameter is not provided
    :param alt_name: alternative name for the parameter, if specified it acts as the serialized key
    :param description: short description of the parameter
    :param validator: predicate the value has to satisfy, if not None
    """

    NamePrefix = "__private_config_parameter__"
    """
    This prefix is used to prefix the actual variables created by this descriptor
    """

    def __init__(self,
                 required: bool,
                 parameter_type: Type[ParameterType],
                 default: Any = None,
                 alt_name: Optional[str] = None,
                 description: Optional[str] = None,
                 validator: Callable[[Any], bool] = None):

        if parameter_type is None:
            raise TypeError("Parameter type must be specified")

        if "typing" == parameter_type.__module__:
            raise TypeError(f"Type description not allowed: {parameter_type}")

        self.parameter_type: Type[ParameterType] = parameter_type \
            if not isinstance(parameter_type, GenericAlias) else parameter_type.__origin__  # type: ignore

        if not issubclass(self.parameter_type, allowed_param_types):
            raise TypeError(f"Invalid parameter type: {self.parameter_type}. Allowed types are: {allowed_param_types}")

        self.required: bool = required

        self.default: Any = default

        self.name: Optional[str] = alt_name
        """
        Alternative name for the parameter. It can be used to define the serialized
        key with having a different variable name.
        """

        self.description: Optional[str] = description

        self.validator: Optional[Callable[[Any], bool]] = validator
        """
        Predicate executed on every assignment of a non None value
        """

    def __set_name__(self, owner, name):
        if name.startswith(f"_{owner.__name__}__"):
            raise TypeError("Parameters cannot be defined for private scope")

        if self.name is None:
            self.name = name

        self.internal_name = ExpectedParameter.NamePrefix + name

    def __get__(self, instance, owner) -> ParameterType:
        if instance is None:
            return self  # type: ignore

        if not hasattr(instance, self.internal_name):
            return self.default

        return getattr(instance, self.internal_name)

    def __set__(self, instance, value):
        if (float == self.parameter_type) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)

        if (value is not None) and (not is_type_allowed(value, allowed_param_types)):
            raise ConfigValidationError(self.name, f"Invalid value type: {type(value)}. "
                                                   f"Allowed types: {allowed_param_types}")

        if (value is not None) and (not isinstance(value, self.parameter_type)):
            raise ConfigValidationError(self.name, f"Invalid value type: {type(value).__name__}. "
                                                   f"Expected: {self.parameter_type.__name__}")

        if (value is not None) and (self.parameter_type is int) and isinstance(value, bool):
            raise ConfigValidationError(self.name, "Invalid value type: bool. Expected: int")

        if (value is not None) and (self.validator is not None) and (not self.validator(value)):
            raise ConfigValidationError(self.name, f"Invalid value: {value}")

        setattr(instance, self.internal_name, value)

    def is_missing(self, instance) -> bool:
        return self.required and (self.__get__(instance, None) is None)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True

        return isinstance(other, type(self)) and \
            (self.required == other.required) and \
            (self.parameter_type == other.parameter_type) and \
            (self.name == other.name) and \
            (self.default == other.default) and \
            (self.description == other.description)

    def to_dict(self, instance=None) -> dict:
        return {
            self.name: {
                'type': self.parameter_type.__name__,
                'required': self.required,
                'default': self.default,
                'description': self.description,
                'currentValue': None if instance is None else self.__get__(instance, None)
            }
        }


class RequiredParameter(ExpectedParameter[ParameterType]):
    """
    Convenience class to represent a required parameter

    :param parameter_type: (str, int, float, bool, list, dict, type(None))
    :param alt_name: alternative name for the parameter, if specified it acts as the serialized key
    :param description: short description of the parameter
    :param validator: predicate the value has to satisfy, if not None
    """

    def __init__(self,
                 parameter_type: Type[ParameterType] = None,
                 alt_name: str = None,
                 description: Optional[str] = None,
                 validator: Callable[[Any], bool] = None):
        super().__init__(True, parameter_type, None, alt_name, description, validator)


class OptionalParameter(ExpectedParameter[ParameterType]):
    """
    Convenience class to represent an optional parameter with a default value

    :param parameter_type: (str, int, float, bool, list, dict, type(None))
    :param default: value used, if the parameter is not provided
    :param alt_name: alternative name for the parameter, if specified it acts as the serialized key
    :param description: short description of the parameter
    :param validator: predicate the value has to satisfy, if not None
    """

    def __init__(self,
                 parameter_type: Type[ParameterType] = None,
                 default: Any = None,
                 alt_name: str = None,
                 description: Optional[str] = None,
                 validator: Callable[[Any], bool] = None):
        super().__init__(False, parameter_type, default, alt_name, description, validator)


def retrieve_parameters(input_val, parameter_type: Type[ExpectedParameter] = ExpectedParameter) \
        -> dict[str, ExpectedParameter]:
    """
    This method retrieves all described parameters with either public or protected
    scope in declaration order, base classes first. Private scoped parameters are ignored.

    :param input_val: object or class to be mapped
    :param parameter_type: parameter type to look for
    :return: dict of parameter names to parameter objects
    """

    object_class = input_val.__class__ if not isinstance(input_val, type) else input_val

    result: dict[str, ExpectedParameter] = dict()
    attribute_names: dict[str, str] = dict()

    for implemented_class in reversed(object_class.__mro__):
        for param_name, param in implemented_class.__dict__.items():
            if isinstance(param, parameter_type) and \
                    (not param_name.startswith(f"_{implemented_class.__name__}__")):  # privates ignored
                # Redefinition in a subclass under the same attribute is an override
                if (param.name in attribute_names) and (attribute_names[param.name] != param_name):
                    raise AttributeError(f"Parameter '{param.name}' is already "
                                         f"declared in '{implemented_class}'")

                attribute_names[param.name] = param_name
                result[param.name] = param

    return result
