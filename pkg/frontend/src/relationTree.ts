/**
 * Relation tree editor state: entities and user-defined non-terminal nodes
 * connected by drag-and-drop into a forest, visualized in its own pane.
 *
 * The structure is a forest at all times — every drop that would give a node
 * two parents or create a cycle (dropping onto your own descendant) is
 * refused rather than repaired. Partial trees are fine and can be submitted.
 */

import type { RelationEdge, RelationNodeKey, RelationPayload } from './types';

export type NodeId = string;

export interface TreeNode {
  id: NodeId;
  kind: 'entity' | 'nonterminal';
  /** entity: the span ideal id; nonterminal: user label. */
  ref: string;
  label: string;
}

export class RelationTree {
  private nodes = new Map<NodeId, TreeNode>();
  private parents = new Map<NodeId, { parent: NodeId; label: string }>();
  private dragSource: NodeId | null = null;
  private counter = 0;

  addEntity(spanIdealId: string, label: string): TreeNode {
    // an entity span is one node in the tree: adding the same ideal twice
    // would collapse to one wire node and could give it two parents
    for (const existing of this.nodes.values()) {
      if (existing.kind === 'entity' && existing.ref === spanIdealId) return existing;
    }
    const node: TreeNode = { id: `n${this.counter++}`, kind: 'entity', ref: spanIdealId, label };
    this.nodes.set(node.id, node);
    return node;
  }

  addNonTerminal(label: string): TreeNode {
    const node: TreeNode = { id: `n${this.counter++}`, kind: 'nonterminal', ref: label, label };
    this.nodes.set(node.id, node);
    return node;
  }

  removeNode(nodeId: NodeId): void {
    if (!this.nodes.delete(nodeId)) return;
    this.parents.delete(nodeId);
    for (const [child, edge] of [...this.parents]) {
      if (edge.parent === nodeId) this.parents.delete(child);
    }
  }

  allNodes(): TreeNode[] {
    return [...this.nodes.values()];
  }

  parentOf(nodeId: NodeId): NodeId | null {
    return this.parents.get(nodeId)?.parent ?? null;
  }

  childrenOf(nodeId: NodeId): NodeId[] {
    return [...this.parents.entries()]
      .filter(([, edge]) => edge.parent === nodeId)
      .map(([child]) => child);
  }

  isDescendant(nodeId: NodeId, possibleAncestor: NodeId): boolean {
    let current = this.parents.get(nodeId)?.parent ?? null;
    while (current !== null) {
      if (current === possibleAncestor) return true;
      current = this.parents.get(current)?.parent ?? null;
    }
    return false;
  }

  startDrag(nodeId: NodeId): boolean {
    if (!this.nodes.has(nodeId)) return false;
    this.dragSource = nodeId;
    return true;
  }

  dragging(): NodeId | null {
    return this.dragSource;
  }

  cancelDrag(): void {
    this.dragSource = null;
  }

  /**
   * Drop the dragged node onto a target, making the target its parent.
   * Refused when: no drag in progress, target missing, self-drop, the source
   * already has a parent, or the target is a descendant of the source (which
   * would close a cycle). Returns whether the edge was created.
   */
  drop(targetId: NodeId, label: string): boolean {
    const source = this.dragSource;
    this.dragSource = null;
    if (source === null || !this.nodes.has(source) || !this.nodes.has(targetId)) return false;
    if (source === targetId) return false;
    if (this.parents.has(source)) return false;
    if (this.isDescendant(targetId, source)) return false;
    this.parents.set(source, { parent: targetId, label });
    return true;
  }

  detach(nodeId: NodeId): void {
    this.parents.delete(nodeId);
  }

  /** Invariant check used by tests: every node has <= 1 parent and no cycles. */
  isForest(): boolean {
    for (const nodeId of this.nodes.keys()) {
      const seen = new Set<NodeId>([nodeId]);
      let current = this.parents.get(nodeId)?.parent ?? null;
      while (current !== null) {
        if (seen.has(current)) return false;
        seen.add(current);
        current = this.parents.get(current)?.parent ?? null;
      }
    }
    return true;
  }

  private nodeKey(node: TreeNode): RelationNodeKey {
    return node.kind === 'entity' ? ['ideal', node.ref] : ['nt', node.ref, node.id];
  }

  /** Wire payload for submission; null when no edges exist yet. */
  toPayload(): RelationPayload | null {
    const edges: RelationEdge[] = [];
    for (const [child, edge] of this.parents) {
      const childNode = this.nodes.get(child);
      const parentNode = this.nodes.get(edge.parent);
      if (!childNode || !parentNode) continue;
      edges.push({
        parent: this.nodeKey(parentNode),
        child: this.nodeKey(childNode),
        label: edge.label,
      });
    }
    return edges.length ? { kind: 'relation', edges } : null;
  }
}
