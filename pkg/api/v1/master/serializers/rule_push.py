from typing import Any, Dict, List, Mapping, Optional

from ..models import RulePush


class RulePushSerializer:
    def serialize(self, push: RulePush, deliveries: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
        data = {
            'version': push.version,
            'sha256': push.sha256,
            'rules': push.rules,
            'vars': push.variables,
            'targets': push.targets,
            'created_at': push.created_at.isoformat(),
        }
        if deliveries is not None:
            data['deliveries'] = dict(deliveries)
        return data

    def serialize_many(self, pushes: List[RulePush], deliveries: Mapping[int, Mapping[str, str]]) -> List[Dict[str, Any]]:
        return [self.serialize(push, deliveries.get(push.version)) for push in pushes]
